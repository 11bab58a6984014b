"""Stationary Dirichlet modes of a 1+1 cavity in conformally flat coordinates.

Time dependence of the positive-frequency modes is ``exp(-i w_m t)`` and
``w_m = m pi / L``. The spatial profile is referenced to the wall at x2,
``sin(w_m (x2 - x)) / sqrt(m pi)``, which is ``(-1)**(m+1)`` times the profile
``sin(w_m (x - x1))``. With this sign choice the closed-form wall couplings
below are exactly the Klein-Gordon products of the mode derivatives; the other
choice conjugates every matrix by ``diag((-1)**m)`` and leaves particle
numbers unchanged. Units have c = 1 and lengths are conformal coordinates.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidArgument

__all__ = [
    "CavityConfig",
    "ModeFunction",
    "QuadratureGrid",
    "FieldSnapshot",
    "CouplingMatrices",
    "CouplingReport",
    "mode_frequency",
    "mode_function",
    "gauss_legendre_grid",
    "inner_product",
    "coupling_matrices",
    "g_matrix",
    "verify_coupling_against_quadrature",
]


@dataclass(frozen=True)
class CavityConfig:
    x1: float
    x2: float
    n_modes: int

    def __post_init__(self):
        if not (np.isfinite(self.x1) and np.isfinite(self.x2)):
            raise InvalidArgument(f"cavity walls must be finite, got x1={self.x1}, x2={self.x2}")
        if not self.x2 > self.x1:
            raise InvalidArgument(f"cavity needs x2 > x1, got x1={self.x1}, x2={self.x2}")
        if int(self.n_modes) != self.n_modes or self.n_modes < 1:
            raise InvalidArgument(f"n_modes must be a positive integer, got {self.n_modes}")
        object.__setattr__(self, "n_modes", int(self.n_modes))

    def length(self) -> float:
        return self.x2 - self.x1

    def omegas(self) -> np.ndarray:
        """Frequencies w_1 ... w_N."""
        return np.arange(1, self.n_modes + 1) * np.pi / self.length()

    def with_modes(self, n_modes: int) -> "CavityConfig":
        return CavityConfig(self.x1, self.x2, n_modes)


def mode_frequency(config: CavityConfig, m: int) -> float:
    if int(m) != m or m < 1:
        raise InvalidArgument(f"mode index must be >= 1, got {m}")
    return m * np.pi / config.length()


@dataclass(frozen=True)
class QuadratureGrid:
    """Composite Gauss-Legendre rule on [x1, x2]."""

    x1: float
    x2: float
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    def same_domain(self, other: "QuadratureGrid") -> bool:
        return (
            self.x1 == other.x1
            and self.x2 == other.x2
            and self.nodes.shape == other.nodes.shape
            and np.array_equal(self.nodes, other.nodes)
        )


def gauss_legendre_grid(x1: float, x2: float, n_panels: int, order: int = 16) -> QuadratureGrid:
    if n_panels < 1 or order < 1:
        raise InvalidArgument("quadrature needs at least one panel and one node")
    if not x2 > x1:
        raise InvalidArgument(f"empty quadrature interval [{x1}, {x2}]")
    ref_x, ref_w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(x1, x2, n_panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * ref_x[None, :]).ravel()
    weights = (half[:, None] * ref_w[None, :]).ravel()
    return QuadratureGrid(x1, x2, nodes, weights)


def default_grid(config: CavityConfig, highest_mode: int | None = None) -> QuadratureGrid:
    # 16 nodes per panel and one panel per half wavelength of the fastest
    # product integrand keeps well above 10 nodes per wavelength
    top = highest_mode or config.n_modes
    return gauss_legendre_grid(config.x1, config.x2, max(4, 2 * top), order=16)


@dataclass(frozen=True)
class FieldSnapshot:
    """A solution sampled at one instant: its value and its time derivative."""

    value: np.ndarray
    dt: np.ndarray
    grid: QuadratureGrid

    def conj(self) -> "FieldSnapshot":
        return FieldSnapshot(np.conj(self.value), np.conj(self.dt), self.grid)

    def __sub__(self, other: "FieldSnapshot") -> "FieldSnapshot":
        _check_grids(self.grid, other.grid)
        return FieldSnapshot(self.value - other.value, self.dt - other.dt, self.grid)

    def scaled(self, c: complex) -> "FieldSnapshot":
        return FieldSnapshot(c * self.value, c * self.dt, self.grid)


def _check_grids(a: QuadratureGrid, b: QuadratureGrid):
    if not a.same_domain(b):
        raise InvalidArgument("field snapshots are sampled on different domains")


@dataclass(frozen=True)
class ModeFunction:
    index: int
    frequency: float
    normalization: float
    x2: float

    def snapshot(self, grid: QuadratureGrid, t: float = 0.0) -> FieldSnapshot:
        phase = np.exp(-1j * self.frequency * t)
        value = self.normalization * phase * np.sin(self.frequency * (self.x2 - grid.nodes))
        return FieldSnapshot(value, -1j * self.frequency * value, grid)


def mode_function(config: CavityConfig, m: int) -> ModeFunction:
    w = mode_frequency(config, m)
    return ModeFunction(int(m), w, 1.0 / np.sqrt(m * np.pi), config.x2)


def _unchecked_mode(x1: float, x2: float, m: int) -> ModeFunction:
    # walls displaced by a finite-difference step; skips CavityConfig validation
    return ModeFunction(m, m * np.pi / (x2 - x1), 1.0 / np.sqrt(m * np.pi), x2)


def inner_product(f: FieldSnapshot, g: FieldSnapshot) -> complex:
    """Klein-Gordon product ``-i * int (f dg*/dt - g* df/dt) dx``."""
    _check_grids(f.grid, g.grid)
    gc = np.conj(g.value)
    gc_dt = np.conj(g.dt)
    integrand = f.value * gc_dt - gc * f.dt
    return complex(-1j * np.dot(f.grid.weights, integrand))


@dataclass(frozen=True)
class CouplingMatrices:
    """Displacement couplings of the two walls plus the g-matrix.

    ``a1[m-1, n-1]`` is ``(d phi_m / d x1, phi_n)``, ``b1`` the matching
    ``-(d phi_m / d x1, phi_n*)``; likewise for wall 2.
    """

    a1: np.ndarray
    a2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    g: np.ndarray
    length: float

    @property
    def a(self) -> np.ndarray:
        return self.a1 + self.a2

    @property
    def b(self) -> np.ndarray:
        return self.b1 + self.b2

    @property
    def n_modes(self) -> int:
        return self.a1.shape[0]

    def scaled(self, factor: float) -> "CouplingMatrices":
        """Couplings for a cavity whose length is ``length / factor``."""
        return CouplingMatrices(
            self.a1 * factor, self.a2 * factor, self.b1 * factor, self.b2 * factor,
            self.g, self.length / factor,
        )

    def generators(self) -> tuple[np.ndarray, np.ndarray]:
        """The real 2N x 2N blocks [[A, B], [B, A]] for each wall."""
        m1 = np.block([[self.a1, self.b1], [self.b1, self.a1]])
        m2 = np.block([[self.a2, self.b2], [self.b2, self.a2]])
        return m1, m2


def g_matrix(n_modes: int) -> np.ndarray:
    m = np.arange(1, n_modes + 1, dtype=float)[:, None]
    n = np.arange(1, n_modes + 1, dtype=float)[None, :]
    odd = (np.arange(1, n_modes + 1)[:, None] + np.arange(1, n_modes + 1)[None, :]) % 2 == 1
    with np.errstate(divide="ignore", invalid="ignore"):
        g = 2.0 * np.sqrt(m * n) / ((m + n) * (m - n) * np.pi)
    return np.where(odd, g, 0.0)


def coupling_matrices(config: CavityConfig) -> CouplingMatrices:
    L = config.length()
    w = config.omegas()
    idx = np.arange(1, config.n_modes + 1)
    sign = np.where((idx[:, None] + idx[None, :]) % 2 == 0, 1.0, -1.0)
    root = np.sqrt(w[:, None] * w[None, :])
    diff = w[:, None] - w[None, :]
    total = w[:, None] + w[None, :]
    off = ~np.eye(config.n_modes, dtype=bool)
    safe = np.where(off, diff, 1.0)
    a_base = np.where(off, root / (L * safe), 0.0)
    b_base = root / (L * total)
    return CouplingMatrices(
        a1=sign * a_base,
        a2=-a_base,
        b1=-sign * b_base,
        b2=b_base.copy(),
        g=g_matrix(config.n_modes),
        length=L,
    )


@dataclass
class CouplingReport:
    residuals: dict
    flagged: list
    tol: float

    @property
    def passed(self) -> bool:
        return not self.flagged

    @property
    def max_residual(self) -> float:
        return max(self.residuals.values())


# fourth-order central difference in the wall position
_FD_OFFSETS = np.array([-2.0, -1.0, 1.0, 2.0])
_FD_WEIGHTS = np.array([1.0, -8.0, 8.0, -1.0]) / 12.0


def _wall_derivative(config: CavityConfig, m: int, wall: int, grid: QuadratureGrid, h: float) -> FieldSnapshot:
    value = np.zeros(grid.nodes.shape, dtype=complex)
    dt = np.zeros_like(value)
    for off, wgt in zip(_FD_OFFSETS, _FD_WEIGHTS):
        x1 = config.x1 + (off * h if wall == 1 else 0.0)
        x2 = config.x2 + (off * h if wall == 2 else 0.0)
        snap = _unchecked_mode(x1, x2, m).snapshot(grid)
        value += wgt * snap.value
        dt += wgt * snap.dt
    return FieldSnapshot(value / h, dt / h, grid)


def verify_coupling_against_quadrature(config: CavityConfig, tol: float = 1e-6) -> CouplingReport:
    """Compare the closed-form couplings with quadrature of their definitions.

    The wall derivative of each mode is taken by finite differences at t = 0,
    and the Klein-Gordon products are evaluated on a Gauss-Legendre grid.
    """
    if not tol > 0:
        raise InvalidArgument("tol must be positive")
    closed = coupling_matrices(config)
    grid = default_grid(config, highest_mode=2 * config.n_modes)
    h = 1e-3 * config.length() / config.n_modes
    modes = [mode_function(config, m).snapshot(grid) for m in range(1, config.n_modes + 1)]
    n = config.n_modes
    quad = {key: np.zeros((n, n)) for key in ("a1", "a2", "b1", "b2")}
    for wall in (1, 2):
        for m in range(1, n + 1):
            d = _wall_derivative(config, m, wall, grid, h)
            for k, phi_n in enumerate(modes):
                quad[f"a{wall}"][m - 1, k] = inner_product(d, phi_n).real
                quad[f"b{wall}"][m - 1, k] = -inner_product(d, phi_n.conj()).real
    residuals = {}
    flagged = []
    for key, q in quad.items():
        diff = np.abs(getattr(closed, key) - q)
        residuals[key] = float(diff.max())
        for i, j in zip(*np.nonzero(diff > tol)):
            flagged.append((key, int(i) + 1, int(j) + 1, float(diff[i, j])))
    return CouplingReport(residuals, flagged, tol)
