"""Exterior Schwarzschild geometry in 1+1 dimensions (geometric units, c = G = 1).

Only the region r > r_s is supported. ``r_s = 0`` is flat spacetime, where the
tortoise coordinate is r itself.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument, NumericalFailure, OutsideDomain

__all__ = [
    "SchwarzschildSpacetime",
    "FLAT",
    "lapse",
    "tortoise",
    "inverse_tortoise",
    "proper_time",
    "radial_to_conformal",
]


@dataclass(frozen=True)
class SchwarzschildSpacetime:
    r_s: float = 0.0

    def __post_init__(self):
        if not (np.isfinite(self.r_s) and self.r_s >= 0):
            raise InvalidArgument(f"Schwarzschild radius must be finite and >= 0, got {self.r_s}")

    @property
    def is_flat(self) -> bool:
        return self.r_s == 0

    def _check(self, r, what="r"):
        r_arr = np.asarray(r, dtype=float)
        floor = self.r_s if self.r_s > 0 else 0.0
        if np.any(~np.isfinite(r_arr)) or np.any(r_arr <= floor):
            worst = float(np.min(r_arr)) if r_arr.size else float("nan")
            raise OutsideDomain(f"{what}={worst} is not outside the horizon r_s={self.r_s}")

    def lapse(self, r):
        self._check(r)
        return _scalar_or_array(1.0 - self.r_s / np.asarray(r, dtype=float))

    def tortoise(self, r):
        self._check(r)
        if self.is_flat:
            return r
        r_arr = np.asarray(r, dtype=float)
        # (r - r_s) / r_s avoids cancellation next to the horizon
        return _scalar_or_array(r_arr + self.r_s * np.log((r_arr - self.r_s) / self.r_s))

    def tortoise_derivative(self, r):
        """dx/dr = 1 / f(r)."""
        return 1.0 / self.lapse(r)

    def inverse_tortoise(self, x: float, max_iter: int = 200) -> float:
        """Radius r > r_s whose tortoise coordinate is ``x``.

        Writing ``r = r_s (1 + e^v)`` turns the map into ``v + e^v = x/r_s - 1``,
        which is increasing and convex in v, so Newton started to the right of
        the root converges monotonically. A bisection fallback guards the
        iteration budget.
        """
        if np.ndim(x):
            return np.array([self.inverse_tortoise(float(xi), max_iter) for xi in np.ravel(x)]).reshape(np.shape(x))
        if not np.isfinite(x):
            raise InvalidArgument(f"x must be finite, got {x}")
        if self.is_flat:
            if x <= 0:
                raise OutsideDomain(f"flat-space radius must be positive, got x={x}")
            return float(x)
        y = x / self.r_s - 1.0
        v = math.log(y) if y > 1.0 else y
        for _ in range(max_iter):
            ev = math.exp(v)
            step = (v + ev - y) / (1.0 + ev)
            v -= step
            if abs(step) <= 4e-16 * max(1.0, abs(v)):
                break
        else:
            v = self._bisect(y, max_iter)
        return self.r_s + self.r_s * math.exp(v)

    def _bisect(self, y: float, max_iter: int) -> float:
        # v + e^v = y: root lies in [y - e^y, y] for y <= 1 and [log y - 1, log y] above
        lo, hi = (y - math.exp(min(y, 700.0)) - 1.0, y) if y <= 1.0 else (math.log(y) - 1.0, math.log(y))
        for _ in range(4 * max_iter):
            mid = 0.5 * (lo + hi)
            if mid + math.exp(mid) > y:
                hi = mid
            else:
                lo = mid
            if hi - lo <= 2e-16 * max(1.0, abs(mid)):
                return 0.5 * (lo + hi)
        raise NumericalFailure(f"inverse tortoise did not converge for x={y + 1.0} r_s, r_s={self.r_s}")

    def proper_time(self, r_e: float, t):
        return np.sqrt(self.lapse(r_e)) * t


FLAT = SchwarzschildSpacetime(0.0)


def _scalar_or_array(a: np.ndarray):
    return float(a) if a.ndim == 0 else a


def lapse(st: SchwarzschildSpacetime, r):
    return st.lapse(r)


def tortoise(st: SchwarzschildSpacetime, r):
    return st.tortoise(r)


def inverse_tortoise(st: SchwarzschildSpacetime, x):
    return st.inverse_tortoise(x)


def proper_time(st: SchwarzschildSpacetime, r_e: float, t):
    return st.proper_time(r_e, t)


def radial_to_conformal(st: SchwarzschildSpacetime, r_traj):
    """Map a trajectory given in Schwarzschild r into tortoise coordinates.

    Positions go through the tortoise map and velocities pick up the chain-rule
    factor 1/f(r). In flat spacetime the input trajectory is returned as is.
    """
    from .trajectories import ConformalTrajectory

    if st.is_flat:
        return r_traj
    return ConformalTrajectory(r_traj, st)
