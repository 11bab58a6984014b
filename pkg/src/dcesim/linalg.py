"""Dense complex matrix exponential by scaling and squaring.

Diagonal Pade approximant of degree 13 with the theta_13 threshold, which is
accurate to double precision for any norm once the matrix is scaled below it.
"""
from __future__ import annotations

import math

import numpy as np

__all__ = ["expm", "PADE13", "THETA13"]

PADE13 = (
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
)
THETA13 = 5.371920351148152


def scaling_power(norm1: float) -> int:
    if norm1 <= THETA13:
        return 0
    return max(0, int(math.ceil(math.log2(norm1 / THETA13))))


def expm(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expm needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    s = scaling_power(float(np.abs(a).sum(axis=0).max()) if n else 0.0)
    a = a / (2.0**s)
    b = PADE13
    ident = np.eye(n, dtype=complex)
    a2 = a @ a
    a4 = a2 @ a2
    a6 = a4 @ a2
    u = a @ (a6 @ (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * ident)
    v = a6 @ (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * ident
    r = np.linalg.solve(v - u, v + u)
    for _ in range(s):
        r = r @ r
    return r
