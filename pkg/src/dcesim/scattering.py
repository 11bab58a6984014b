"""Scattering evaluation for rigidly translated cavities.

The field is expanded in the stationary modes of the comoving cavity,
``phi = sum_n Q_mn(t) sin(w_n (x - x1(t)))``. To first order in the wall
speed the amplitudes split as ``Q = Q0 + eps Q1`` with ``Q0`` a pure phase
and ``Q1`` driven through the g-matrix. Once the motion has stopped, Q and
its time derivative are matched to in/out stationary modes to read off the
Bogoliubov coefficients.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import quadrature
from .errors import InvalidArgument, UnsupportedTrajectory
from .modes import CavityConfig, g_matrix
from .symplectic import BogoliubovTransform
from .trajectories import Trajectory, validate

__all__ = ["ScatteringState", "evolve", "extract_coefficients", "scattering_transform"]


@dataclass(frozen=True, eq=False)
class ScatteringState:
    """Amplitudes ``Q = q0 + epsilon * q1`` and their time derivatives at ``time``.

    Row index m labels the incoming mode, column index n the stationary mode
    of the comoving cavity.
    """

    q0: np.ndarray
    q1: np.ndarray
    q0dot: np.ndarray
    q1dot: np.ndarray
    time: float
    omegas: np.ndarray
    epsilon: float
    end_velocity: float = 0.0
    quadrature_error: float = 0.0

    @classmethod
    def before_motion(cls, omegas: np.ndarray, t: float = 0.0) -> "ScatteringState":
        if t > 0:
            raise InvalidArgument("the pre-motion state is defined for t <= 0")
        phase = np.exp(-1j * omegas * t)
        z = np.zeros((omegas.size, omegas.size), dtype=complex)
        return cls(np.diag(phase), z, np.diag(-1j * omegas * phase), z.copy(), t, omegas, 0.0)

    @property
    def amplitude(self) -> np.ndarray:
        return self.q0 + self.epsilon * self.q1

    @property
    def amplitude_dot(self) -> np.ndarray:
        return self.q0dot + self.epsilon * self.q1dot


def evolve(
    traj: Trajectory,
    config: CavityConfig,
    n_modes: int | None = None,
    quadrature_settings: quadrature.QuadratureSettings | None = None,
) -> ScatteringState:
    """Amplitudes at the end of a rigid translation.

    Q0 is the free phase. Q1 is the first-order solution with continuous Q
    and dQ/dt at t = 0, evaluated by quadrature of the wall velocity against
    the sum and difference phases.
    """
    if not traj.is_rigid():
        raise UnsupportedTrajectory(
            "the scattering method needs a rigid translation (x2 - x1 constant in time)"
        )
    report = validate(traj)
    if not report.valid:
        raise InvalidArgument("invalid trajectory: " + "; ".join(report.violations))
    if n_modes is not None:
        config = config.with_modes(n_modes)
    x0 = traj.position(1, 0.0)
    if abs(x0 - config.x1) > 1e-10 * max(1.0, abs(config.x1)):
        raise InvalidArgument(f"trajectory starts wall 1 at {x0}, cavity has it at {config.x1}")
    w = config.omegas()
    N = w.size
    T = traj.duration
    g = g_matrix(N)
    total = w[:, None] + w[None, :]
    diff = w[:, None] - w[None, :]

    # first-order scale: the largest wall speed, so y = q / eps has unit speed
    eps = report.max_speed
    q0 = np.diag(np.exp(-1j * w * T))
    q0dot = np.diag(-1j * w * np.exp(-1j * w * T))
    if eps == 0.0:
        z = np.zeros((N, N), dtype=complex)
        return ScatteringState(q0, z, q0dot, z.copy(), T, w, 0.0)

    def evaluate(t, wt):
        minus, plus = quadrature.phase_integrals(w, t, wt * traj.velocity(1, t))
        return {"minus": minus, "plus": plus}

    sums, err = quadrature.adaptive(evaluate, T, 2.0 * w[-1] + traj.characteristic_frequency(), quadrature_settings)
    minus, plus = sums["minus"], sums["plus"]
    down = np.exp(-1j * w * T)[None, :]
    up = np.exp(1j * w * T)[None, :]
    wn = w[None, :]
    dq = -g * (total * minus * down - diff * plus * up)
    dqdot = -g * (total * minus * (-1j * wn) * down - diff * plus * (1j * wn) * up)
    v_end = float(traj.velocity(1, T))
    if v_end != 0.0:
        dqdot = dqdot - g * v_end * 2.0 * wn * np.exp(-1j * w * T)[:, None]
    return ScatteringState(q0, dq / eps, q0dot, dqdot / eps, T, w, eps, v_end, err)


def extract_coefficients(state: ScatteringState, T: float | None = None):
    """Match Q(T), dQ/dt(T) to outgoing stationary modes.

    Returns ``((alpha_tilde, beta_tilde), transform)``: the raw matching
    coefficients and the transform with the pre-motion phase undone,
    ``alpha = e^{i w_m T} alpha_tilde`` and likewise for beta.
    """
    T = state.time if T is None else T
    w = state.omegas
    wn = w[None, :]
    # the free part Q0 matches to (identity, 0) exactly; only eps Q1 is projected
    Q = state.epsilon * state.q1
    Qd = state.epsilon * state.q1dot
    alpha_t = np.eye(w.size) + 0.5 * np.exp(1j * wn * T) * (Q + 1j * Qd / wn)
    beta_t = 0.5 * np.exp(-1j * wn * T) * (Q - 1j * Qd / wn)
    phase = np.exp(1j * w * T)[:, None]
    return (alpha_t, beta_t), BogoliubovTransform(phase * alpha_t, phase * beta_t)


def scattering_transform(
    traj: Trajectory,
    config: CavityConfig,
    quadrature_settings: quadrature.QuadratureSettings | None = None,
) -> BogoliubovTransform:
    state = evolve(traj, config, quadrature_settings=quadrature_settings)
    return extract_coefficients(state)[1]
