"""First-order Dyson coefficients and closed forms for the oscillating wall.

``dyson_transform`` works for any slow trajectory. The remaining functions
evaluate the closed-form coefficients of the Schwarzschild oscillating-wall
scenario to lowest order in the curvature, their resonant limits, and
frequency scans over them.
"""
from __future__ import annotations

import cmath
import csv
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import quadrature
from .errors import InvalidArgument, RemovableSingularity
from .modes import CavityConfig, coupling_matrices
from .spacetime import SchwarzschildSpacetime
from .symplectic import BogoliubovTransform, FrequencyMatrix
from .trajectories import OscillatingScenario, Trajectory, validate

__all__ = [
    "PerturbativeResult",
    "ResonanceSpec",
    "ClosedFormTerms",
    "ScanRow",
    "ScanResult",
    "dyson_transform",
    "oscillating_beta_terms",
    "oscillating_beta_closed_form",
    "closed_form_beta_matrix",
    "resonant_particle_number",
    "subharmonic_beta",
    "resonance_scan",
    "find_peaks",
    "write_scan_csv",
]

SLOW_LIMIT = 0.1
POLE_TOL = 1e-9


@dataclass
class PerturbativeResult:
    transform: BogoliubovTransform
    max_speed: float
    epsilon: float
    quadrature_error: float


def _check_start(traj: Trajectory, config: CavityConfig):
    for j, x in ((1, config.x1), (2, config.x2)):
        x0 = traj.position(j, 0.0)
        if abs(x0 - x) > 1e-10 * max(1.0, abs(x)):
            raise InvalidArgument(f"trajectory starts wall {j} at {x0}, cavity has it at {x}")


def dyson_transform(
    traj: Trajectory,
    config: CavityConfig,
    frequencies: FrequencyMatrix | None = None,
    quadrature_settings: quadrature.QuadratureSettings | None = None,
) -> PerturbativeResult:
    """First-order time-ordered exponential for slow walls.

    alpha picks up the length-dependent phase and wall-induced mode mixing;
    beta collects pair creation from each moving wall. Couplings are taken at
    the t = 0 geometry, and the frequency shift is the linearisation of
    ``m pi / L(t)`` about the initial length.
    """
    report = validate(traj)
    if not report.valid:
        raise InvalidArgument("invalid trajectory: " + "; ".join(report.violations))
    _check_start(traj, config)
    omegas = config.omegas() if frequencies is None else frequencies.omegas
    if omegas.size != config.n_modes:
        raise InvalidArgument(f"{omegas.size} frequencies supplied for {config.n_modes} modes")
    L0 = config.length()
    t_probe = np.linspace(0.0, traj.duration, 2001)
    epsilon = float(np.max(np.abs(traj.length(t_probe) - L0)) / L0)
    if report.max_speed > SLOW_LIMIT or epsilon > SLOW_LIMIT:
        warnings.warn(
            f"first-order result outside its regime: max speed {report.max_speed:.3g}, "
            f"relative length change {epsilon:.3g}",
            stacklevel=2,
        )
    cm = coupling_matrices(config)
    moving = [j for j in (1, 2) if np.any(traj.velocity(j, t_probe) != 0.0)]
    walls = {1: (cm.a1, cm.b1), 2: (cm.a2, cm.b2)}
    T = traj.duration

    def evaluate(t, w):
        mix = np.zeros((omegas.size, omegas.size), dtype=complex)
        pair = np.zeros_like(mix)
        for j in moving:
            minus, plus = quadrature.phase_integrals(omegas, t, w * traj.velocity(j, t))
            a, b = walls[j]
            mix += a * minus
            pair += b * plus
        stretch = float(np.dot(w, traj.length(t) - L0))
        mix[np.diag_indices_from(mix)] += -1j * omegas * stretch / L0
        return {"mix": mix, "pair": pair}

    fastest = 2.0 * omegas[-1] + traj.characteristic_frequency()
    if moving:
        sums, err = quadrature.adaptive(evaluate, T, fastest, quadrature_settings)
    else:
        sums, err = evaluate(*quadrature.time_nodes(T, 1)), 0.0
    phase = np.exp(1j * omegas * T)[:, None]
    alpha = phase * (np.eye(omegas.size) + sums["mix"])
    beta = phase * sums["pair"]
    return PerturbativeResult(BogoliubovTransform(alpha, beta), report.max_speed, epsilon, err)


# --- closed forms for the oscillating wall ---------------------------------


@dataclass(frozen=True)
class ResonanceSpec:
    q: int
    r: int
    branch: str = "main"

    def __post_init__(self):
        if self.q < 1 or self.r < 1:
            raise InvalidArgument("resonance mode indices must be >= 1")
        if self.branch not in ("main", "subharmonic"):
            raise InvalidArgument(f"branch must be 'main' or 'subharmonic', got {self.branch!r}")

    def frequency(self, scenario: OscillatingScenario, st: SchwarzschildSpacetime) -> float:
        total = float(scenario.omega0(self.q, st) + scenario.omega0(self.r, st))
        return total if self.branch == "main" else 0.5 * total


@dataclass(frozen=True)
class ClosedFormTerms:
    """beta = prefactor * (flat + curvature)."""

    prefactor: complex
    flat: complex
    curvature: complex
    branch: str

    @property
    def beta(self) -> complex:
        return self.prefactor * (self.flat + self.curvature)

    @property
    def curvature_beta(self) -> complex:
        return self.prefactor * self.curvature


def _lapse(st, r):
    return 1.0 if st.is_flat else st.lapse(r)


def oscillating_beta_terms(
    scenario: OscillatingScenario,
    st: SchwarzschildSpacetime,
    m: int,
    n: int,
    allow_limit: bool = False,
) -> ClosedFormTerms:
    """Closed-form beta_mn split into its flat and curvature parts.

    The flat part resonates at ``nu = w_m + w_n`` and the curvature part at
    half that. On either pole, with ``T = p pi / nu`` tied to nu, the 0/0 is
    replaced by its limit when ``allow_limit`` is set.

    The curvature part is the first-order-in-r_s evaluation of the Dyson
    integral for the tortoise-mapped wall velocity; its resonant denominator
    is ``(w_m + w_n)^2 - 4 nu^2``.
    """
    if m < 1 or n < 1:
        raise InvalidArgument("mode indices must be >= 1")
    if not st.is_flat and scenario.r0 <= st.r_s:
        raise InvalidArgument(f"r0={scenario.r0} must exceed r_s={st.r_s}")
    nu, T, p = scenario.nu, scenario.T, scenario.p
    R = scenario.outer_radius
    wm, wn = float(scenario.omega0(m, st)), float(scenario.omega0(n, st))
    W = wm + wn
    pref = (
        cmath.exp(-1j * wn * T) * scenario.epsilon * nu * math.sqrt(wm * wn)
        * _lapse(st, scenario.r0) / _lapse(st, R)
    )
    sign_p = -1.0 if p % 2 else 1.0
    phase_W = cmath.exp(1j * W * T)
    branch = "regular"

    if abs(nu - W) < POLE_TOL * nu:
        if not allow_limit:
            raise RemovableSingularity(
                f"nu={nu} sits on the main resonance w_{m}+w_{n}={W}; request the limit branch"
            )
        flat = sign_p * T / (2.0 * W)
        branch = "main-limit"
    else:
        flat = 1j * (sign_p - phase_W) / (W * W - nu * nu)

    c = scenario.A * st.r_s / R**2
    if c == 0.0:
        curvature = 0.0j
    elif abs(nu - 0.5 * W) < POLE_TOL * nu:
        if not allow_limit:
            raise RemovableSingularity(
                f"nu={nu} sits on the subharmonic (w_{m}+w_{n})/2={W / 2}; request the limit branch"
            )
        curvature = 1j * c * T / (4.0 * W)
        branch = "subharmonic-limit"
    else:
        curvature = c * (nu / W) * (phase_W - 1.0) / (W * W - 4.0 * nu * nu)
    return ClosedFormTerms(pref, complex(flat), complex(curvature), branch)


def oscillating_beta_closed_form(
    scenario: OscillatingScenario,
    st: SchwarzschildSpacetime,
    m: int,
    n: int,
    allow_limit: bool = False,
) -> complex:
    return oscillating_beta_terms(scenario, st, m, n, allow_limit).beta


def closed_form_beta_matrix(
    scenario: OscillatingScenario, st: SchwarzschildSpacetime, n_modes: int, allow_limit: bool = True
) -> np.ndarray:
    out = np.empty((n_modes, n_modes), dtype=complex)
    for m in range(1, n_modes + 1):
        for n in range(1, n_modes + 1):
            out[m - 1, n - 1] = oscillating_beta_closed_form(scenario, st, m, n, allow_limit)
    return out


def resonant_particle_number(
    scenario: OscillatingScenario,
    st: SchwarzschildSpacetime,
    spec: ResonanceSpec,
    m: int,
    n: int,
) -> float:
    """Long-run |beta_mn|^2 at the main resonance ``nu = w_q + w_r``.

    ``(1 - 2 L0 r_s / r0^2) m n (eps w_1 T)^2 / 4`` when m + n = q + r, else 0.
    """
    if spec.branch != "main":
        raise InvalidArgument("the long-run particle number applies to the main resonance only")
    if scenario.nu * scenario.T < 20:
        warnings.warn(f"nu T = {scenario.nu * scenario.T:.3g} is not large; the formula assumes nu T >> 1", stacklevel=2)
    if m + n != spec.q + spec.r:
        return 0.0
    w1 = float(scenario.omega0(1, st))
    reduction = 1.0 - 2.0 * scenario.L0 * st.r_s / scenario.r0**2 if st.r_s > 0 else 1.0
    return 0.25 * reduction * m * n * (scenario.epsilon * w1 * scenario.T) ** 2


def subharmonic_beta(scenario: OscillatingScenario, st: SchwarzschildSpacetime, q: int, r: int) -> complex:
    """beta_qr when driven at ``nu = (w_q + w_r)/2``.

    The first bracket term vanishes for even p; the second grows linearly in T.
    """
    spec = ResonanceSpec(q, r, "subharmonic")
    nu_sub = spec.frequency(scenario, st)
    if abs(scenario.nu - nu_sub) > POLE_TOL * nu_sub:
        raise InvalidArgument(
            f"scenario drives at nu={scenario.nu}, not the subharmonic {nu_sub}; build it with "
            "OscillatingScenario.at_resonance(..., branch='subharmonic')"
        )
    eps, T, p = scenario.epsilon, scenario.T, scenario.p
    f0 = _lapse(st, scenario.r0)
    fR = _lapse(st, scenario.outer_radius)
    wq = float(scenario.omega0(q, st))
    bracket = (
        -(2.0 / 3.0) * (1.0 - (-1.0) ** p) / (f0 * (q + r))
        + eps * (math.pi / 8.0) * st.r_s * T / scenario.outer_radius**2
    )
    return 1j * cmath.exp(-1j * wq * T) * eps * math.sqrt(q * r) * f0**2 / fR * bracket


# --- scans -------------------------------------------------------------------


@dataclass(frozen=True)
class ScanRow:
    nu: float
    m: int
    n: int
    beta: complex
    curvature: complex
    branch: str


@dataclass
class ScanResult:
    rows: list
    peaks: list
    curvature_peaks: list

    @property
    def nu(self) -> np.ndarray:
        return np.array([row.nu for row in self.rows])

    @property
    def abs_beta(self) -> np.ndarray:
        return np.array([abs(row.beta) for row in self.rows])

    @property
    def abs_curvature(self) -> np.ndarray:
        return np.array([abs(row.curvature) for row in self.rows])


def find_peaks(values, rel_height: float = 0.5) -> list:
    """Indices of interior local maxima at least ``rel_height`` times the global max."""
    v = np.asarray(values, dtype=float)
    if v.size < 3 or not np.any(v > 0):
        return []
    top = v.max()
    inner = (v[1:-1] > v[:-2]) & (v[1:-1] >= v[2:]) & (v[1:-1] >= rel_height * top)
    return [int(i) + 1 for i in np.nonzero(inner)[0]]


def _scan_point(template, st, nu, m, n):
    terms = oscillating_beta_terms(template.with_nu(float(nu)), st, m, n, allow_limit=True)
    return ScanRow(float(nu), m, n, terms.beta, terms.curvature_beta, terms.branch)


def resonance_scan(
    template: OscillatingScenario,
    st: SchwarzschildSpacetime,
    nu_grid,
    m: int,
    n: int,
    workers: int = 1,
    rel_height: float = 0.5,
) -> ScanResult:
    """|beta_mn| over a grid of driving frequencies at fixed p.

    Each grid point is an independent scenario with ``T = p pi / nu``. Grid
    points on a pole use the limit branch. Rows keep the grid order whatever
    the worker count.
    """
    grid = [float(v) for v in nu_grid]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(lambda v: _scan_point(template, st, v, m, n), grid))
    else:
        rows = [_scan_point(template, st, v, m, n) for v in grid]
    result = ScanResult(rows, [], [])
    result.peaks = find_peaks(result.abs_beta, rel_height)
    result.curvature_peaks = find_peaks(result.abs_curvature, rel_height)
    return result


SCAN_COLUMNS = ("nu", "m", "n", "abs_beta", "re_beta", "im_beta", "branch")


def write_scan_csv(rows, stream):
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(SCAN_COLUMNS)
    for row in rows:
        writer.writerow([
            f"{row.nu:.17e}", row.m, row.n, f"{abs(row.beta):.17e}",
            f"{row.beta.real:.17e}", f"{row.beta.imag:.17e}", row.branch,
        ])
