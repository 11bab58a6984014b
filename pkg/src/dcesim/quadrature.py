"""Composite Gauss-Legendre quadrature in time for oscillatory integrands.

Panels are one period of the fastest phase in the integrand long, so every
panel boundary falls on a period boundary. The panel count is doubled until
two successive results agree to the requested tolerance; the difference is
returned as the error estimate.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import InvalidArgument, NumericalFailure


@dataclass(frozen=True)
class QuadratureSettings:
    tol: float = 1e-12
    order: int = 16
    max_panels: int = 1 << 17
    min_panels: int = 4

    def __post_init__(self):
        if not self.tol > 0:
            raise InvalidArgument(f"quadrature tolerance must be positive, got {self.tol}")
        if self.order < 2 or self.min_panels < 1:
            raise InvalidArgument("quadrature order must be >= 2 and min_panels >= 1")


_LEGGAUSS: dict = {}


def _reference(order: int):
    if order not in _LEGGAUSS:
        _LEGGAUSS[order] = np.polynomial.legendre.leggauss(order)
    return _LEGGAUSS[order]


def time_nodes(T: float, n_panels: int, order: int = 16) -> tuple[np.ndarray, np.ndarray]:
    x, w = _reference(order)
    h = T / n_panels
    starts = h * np.arange(n_panels)
    t = (starts[:, None] + 0.5 * h * (x[None, :] + 1.0)).ravel()
    weights = np.tile(0.5 * h * w, n_panels)
    return t, weights


def adaptive(
    evaluate: Callable[[np.ndarray, np.ndarray], dict],
    T: float,
    fastest_frequency: float,
    settings: QuadratureSettings | None = None,
) -> tuple[dict, float]:
    """Refine ``evaluate(t, w)`` until successive panel doublings agree.

    ``evaluate`` returns a dict of arrays, each a weighted sum over the nodes.
    """
    settings = settings or QuadratureSettings()
    periods = T * abs(fastest_frequency) / (2 * math.pi)
    n = max(settings.min_panels, int(math.ceil(periods)))
    prev = evaluate(*time_nodes(T, n, settings.order))
    while True:
        n *= 2
        if n > settings.max_panels:
            raise NumericalFailure(
                f"time quadrature did not reach tol={settings.tol} within {settings.max_panels} panels "
                f"(T={T}, fastest frequency={fastest_frequency})"
            )
        cur = evaluate(*time_nodes(T, n, settings.order))
        err = max(float(np.max(np.abs(cur[k] - prev[k]))) for k in cur)
        if err <= settings.tol:
            return cur, err
        prev = cur


def phase_integrals(omegas: np.ndarray, t: np.ndarray, wv: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Weighted sums ``sum_k wv_k exp(-i (w_m -/+ w_n) t_k)`` for all mode pairs.

    Returns ``(minus, plus)``. Both are a single matrix product over the
    time nodes.
    """
    n = omegas.size
    minus = np.zeros((n, n), dtype=complex)
    plus = np.zeros((n, n), dtype=complex)
    chunk = max(1024, (1 << 22) // max(n, 1))
    for start in range(0, t.size, chunk):
        sl = slice(start, start + chunk)
        e = np.exp(-1j * np.outer(omegas, t[sl]))
        x = e * wv[None, sl]
        minus += x @ e.conj().T
        plus += x @ e.T
    return minus, plus
