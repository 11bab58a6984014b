"""Nonperturbative solution of dS/dt = [i Omega + M1 dx1/dt + M2 dx2/dt] S.

The generator is real-structured (Hamiltonian in the Bogoliubov sense) for
any truncation, so a Lie-group method keeps S on the group up to round-off.
The default method is the two-node fourth-order Magnus integrator; classical
RK4 is available as an independent check.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .errors import InvalidArgument, NumericalFailure
from .modes import CavityConfig, coupling_matrices
from .symplectic import BogoliubovTransform, FrequencyMatrix, identity_residuals
from .trajectories import Trajectory, validate

__all__ = [
    "METHODS",
    "IntegrationSettings",
    "IntegrationResult",
    "integrate",
    "ConvergenceReport",
    "convergence_study",
]

METHODS = ("magnus4", "rk4")
_GAUSS = (0.5 - math.sqrt(3.0) / 6.0, 0.5 + math.sqrt(3.0) / 6.0)


@dataclass(frozen=True)
class IntegrationSettings:
    """Stepping controls.

    Give ``n_steps`` for a fixed grid, or leave it ``None`` to double the step
    count from an automatic start until successive results agree to ``tol``.
    """

    n_modes: int | None = None
    n_steps: int | None = None
    tol: float = 1e-10
    method: str = "magnus4"
    recompute_couplings: bool = True
    backend: str | None = None
    max_steps: int = 1 << 20

    def __post_init__(self):
        if self.method not in METHODS:
            raise InvalidArgument(f"method must be one of {METHODS}, got {self.method!r}")
        if self.n_modes is not None and self.n_modes < 1:
            raise InvalidArgument(f"n_modes must be >= 1, got {self.n_modes}")
        if self.n_steps is not None and self.n_steps < 1:
            raise InvalidArgument(f"n_steps must be >= 1, got {self.n_steps}")
        if not self.tol > 0:
            raise InvalidArgument(f"tolerance must be positive, got {self.tol}")


@dataclass
class IntegrationResult:
    transform: BogoliubovTransform
    residuals: tuple
    n_steps: int
    error_estimate: float | None
    method: str
    backend: str
    history: list = field(default_factory=list)


def _check_start(traj: Trajectory, config: CavityConfig):
    for j, x in ((1, config.x1), (2, config.x2)):
        x0 = traj.position(j, 0.0)
        if abs(x0 - x) > 1e-10 * max(1.0, abs(x)):
            raise InvalidArgument(f"trajectory starts wall {j} at {x0}, cavity has it at {x}")


class _Problem:
    """Everything needed to step one trajectory, independent of step count."""

    def __init__(self, traj, config, settings, frequencies):
        self.traj = traj
        self.T = traj.duration
        self.L0 = config.length()
        self.recompute = settings.recompute_couplings
        w = config.omegas() if frequencies is None else frequencies.omegas
        if w.size != config.n_modes:
            raise InvalidArgument(f"{w.size} frequencies supplied for {config.n_modes} modes")
        self.omegas = w
        self.omega = np.ascontiguousarray(np.concatenate([w, -w]))
        m1, m2 = coupling_matrices(config).generators()
        self.m1 = np.asfortranarray(m1)
        self.m2 = np.asfortranarray(m2)
        probe = np.linspace(0.0, self.T, 2001)
        self.vmax = max(float(np.max(np.abs(traj.velocity(j, probe)))) for j in (1, 2))
        norm = max(np.abs(self.m1).sum(axis=0).max(), np.abs(self.m2).sum(axis=0).max())
        self.rate = float(w[-1] + self.vmax * norm)

    def coefficients(self, t):
        t = np.clip(t, 0.0, self.T)
        s = self.L0 / self.traj.length(t) if self.recompute else np.ones_like(t)
        return np.stack([s, self.traj.velocity(1, t), self.traj.velocity(2, t)], axis=-1)

    def step_table(self, n, method):
        h = self.T / n
        start = h * np.arange(n)
        if method == "magnus4":
            nodes = [start + c * h for c in _GAUSS]
        else:
            nodes = [start, start + 0.5 * h, start + h]
        cols = [self.coefficients(t) for t in nodes]
        return np.ascontiguousarray(np.concatenate(cols, axis=1)), h

    def run(self, n, method, kernels):
        table, h = self.step_table(n, method)
        step = kernels.magnus4 if method == "magnus4" else kernels.rk4
        return np.asarray(step(self.omega, self.m1, self.m2, table, h))

    def initial_steps(self):
        # about 1.5 steps per radian of the fastest rotation
        return max(8, int(math.ceil(1.5 * self.rate * self.T)))


def integrate(
    traj: Trajectory,
    config: CavityConfig,
    settings: IntegrationSettings | None = None,
    frequencies: FrequencyMatrix | None = None,
    interior: int | None = None,
) -> IntegrationResult:
    """Integrate S(T) from S(0) = I along ``traj``.

    With ``recompute_couplings`` the frequencies and couplings follow the
    instantaneous length, both scaling as ``L0 / L(t)``; otherwise they stay
    at their t = 0 values.
    """
    settings = settings or IntegrationSettings()
    if settings.n_modes is not None and settings.n_modes != config.n_modes:
        config = config.with_modes(settings.n_modes)
    report = validate(traj)
    if not report.valid:
        raise InvalidArgument("invalid trajectory: " + "; ".join(report.violations))
    _check_start(traj, config)
    backend = settings.backend or _backend.DEFAULT
    kernels = _backend.get(backend)
    problem = _Problem(traj, config, settings, frequencies)

    history = []
    if settings.n_steps is not None:
        n = settings.n_steps
        S = problem.run(n, settings.method, kernels)
        err = None
    else:
        n = problem.initial_steps()
        prev = problem.run(n, settings.method, kernels)
        while True:
            if 2 * n > settings.max_steps:
                raise NumericalFailure(
                    f"step size underflow: {settings.method} did not reach tol={settings.tol} "
                    f"within {settings.max_steps} steps (T={problem.T}, last change={history[-1][1] if history else float('nan'):.3g})"
                )
            n *= 2
            S = problem.run(n, settings.method, kernels)
            err = float(np.max(np.abs(S - prev)))
            history.append((n, err))
            if err <= settings.tol:
                break
            prev = S
    transform = BogoliubovTransform.from_matrix(S)
    if not (np.all(np.isfinite(transform.alpha)) and np.all(np.isfinite(transform.beta))):
        raise NumericalFailure(f"non-finite entries in S after {n} steps")
    res = identity_residuals(transform, interior)
    return IntegrationResult(transform, res, n, err, settings.method, backend, history)


@dataclass
class ConvergenceReport:
    n_list: list
    step_list: list
    dominant_index: tuple
    dominant_beta: np.ndarray
    residuals: np.ndarray
    changes: list
    tol: float

    @property
    def converged(self) -> bool:
        return bool(self.changes) and self.changes[-1] < self.tol


def convergence_study(
    traj: Trajectory,
    config: CavityConfig,
    n_list,
    step_list,
    tol: float = 1e-6,
    method: str = "magnus4",
    recompute_couplings: bool = True,
    backend: str | None = None,
) -> ConvergenceReport:
    """Tabulate the dominant |beta| and interior residual over an (N, steps) grid.

    The dominant entry is located in the largest-N, finest-step run and then
    followed across the grid. Converged means the change between the last two
    N values at the finest step count is below ``tol``.
    """
    n_list = [int(n) for n in n_list]
    step_list = [int(s) for s in step_list]
    for name, lst in (("N", n_list), ("step", step_list)):
        if not lst or any(b <= a for a, b in zip(lst, lst[1:])):
            raise InvalidArgument(f"{name} list must be nonempty and strictly increasing")
    runs = {}
    for N in n_list:
        for steps in step_list:
            settings = IntegrationSettings(
                n_modes=N, n_steps=steps, method=method,
                recompute_couplings=recompute_couplings, backend=backend,
            )
            runs[N, steps] = integrate(traj, config.with_modes(N), settings)
    best = runs[n_list[-1], step_list[-1]].transform.beta
    k = min(n_list[0], best.shape[0])
    flat = int(np.argmax(np.abs(best[:k, :k])))
    idx = divmod(flat, k)
    dominant = np.array([[abs(runs[N, s].transform.beta[idx]) for s in step_list] for N in n_list])
    residuals = np.array([[max(runs[N, s].residuals) for s in step_list] for N in n_list])
    changes = [float(abs(dominant[i + 1, -1] - dominant[i, -1])) for i in range(len(n_list) - 1)]
    return ConvergenceReport(n_list, step_list, (idx[0] + 1, idx[1] + 1), dominant, residuals, changes, tol)
