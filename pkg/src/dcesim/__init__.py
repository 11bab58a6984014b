"""Bogoliubov transformations for cavities with moving walls.

Flat and exterior-Schwarzschild spacetime in 1+1 dimensions, with three
independent routes to the transformation: first-order Dyson quadrature,
direct integration of the mode equations, and a scattering calculation for
rigid translations. Closed forms cover the sinusoidally driven wall.
"""
from .errors import (
    ConfigError,
    DCEError,
    InvalidArgument,
    NumericalFailure,
    OutsideDomain,
    RemovableSingularity,
    UnsupportedTrajectory,
)
from .integrator import IntegrationSettings, convergence_study, integrate
from .modes import CavityConfig, coupling_matrices, g_matrix, inner_product, mode_function
from .perturbative import (
    ResonanceSpec,
    closed_form_beta_matrix,
    dyson_transform,
    oscillating_beta_closed_form,
    resonance_scan,
    resonant_particle_number,
    subharmonic_beta,
)
from .scattering import evolve, extract_coefficients, scattering_transform
from .spacetime import FLAT, SchwarzschildSpacetime
from .symplectic import BogoliubovTransform, compose, identity_residuals, vacuum_particle_numbers
from .trajectories import (
    OscillatingScenario,
    OscillatingWall,
    RigidTranslation,
    StaticTrajectory,
    TabulatedTrajectory,
)

__version__ = "0.1.0"
