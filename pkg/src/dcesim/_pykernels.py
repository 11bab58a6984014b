"""Numpy versions of the compiled stepping loops (same signatures)."""
from __future__ import annotations

import math

import numpy as np

from .linalg import expm

__all__ = ["expm", "magnus4", "rk4"]


def _generator(omega, m1, m2, s, v1, v2):
    g = s * (v1 * m1 + v2 * m2) + 0j
    g[np.diag_indices_from(g)] += 1j * s * omega
    return g


def magnus4(omega, m1, m2, coeffs, h):
    n = omega.size
    S = np.eye(n, dtype=complex)
    c2 = math.sqrt(3.0) * h * h / 12.0
    for row in coeffs:
        g1 = _generator(omega, m1, m2, *row[:3])
        g2 = _generator(omega, m1, m2, *row[3:6])
        om = 0.5 * h * (g1 + g2) + c2 * (g2 @ g1 - g1 @ g2)
        S = expm(om) @ S
    return S


def rk4(omega, m1, m2, coeffs, h):
    n = omega.size
    S = np.eye(n, dtype=complex)
    for row in coeffs:
        g0 = _generator(omega, m1, m2, *row[:3])
        gm = _generator(omega, m1, m2, *row[3:6])
        g1 = _generator(omega, m1, m2, *row[6:9])
        k1 = g0 @ S
        k2 = gm @ (S + 0.5 * h * k1)
        k3 = gm @ (S + 0.5 * h * k2)
        k4 = g1 @ (S + h * k3)
        S = S + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
    return S
