"""Prescribed wall worldlines x_1(t), x_2(t) on 0 <= t <= T.

All kinds evaluate vectorised over numpy time arrays and give analytic
velocities. ``boundary`` is 1 for the wall at x1 and 2 for the wall at x2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InvalidArgument, OutsideDomain
from .spacetime import SchwarzschildSpacetime

__all__ = [
    "Trajectory",
    "StaticTrajectory",
    "OscillatingWall",
    "RigidTranslation",
    "TabulatedTrajectory",
    "ConformalTrajectory",
    "OscillatingScenario",
    "TrajectoryReport",
    "position",
    "velocity",
    "validate",
]

_T_SLACK = 1e-12


class Trajectory:
    """Base class. Subclasses provide ``duration`` and ``_pos``/``_vel``."""

    kind: str = "abstract"
    duration: float

    # rough rate of change of the motion, used to size quadrature panels
    def characteristic_frequency(self) -> float:
        return 2 * np.pi / self.duration

    def _times(self, t):
        t_arr = np.asarray(t, dtype=float)
        slack = _T_SLACK * max(1.0, self.duration)
        if np.any(t_arr < -slack) or np.any(t_arr > self.duration + slack):
            raise InvalidArgument(f"time outside [0, {self.duration}]")
        return np.clip(t_arr, 0.0, self.duration)

    @staticmethod
    def _wall(boundary):
        if boundary not in (1, 2):
            raise InvalidArgument(f"boundary must be 1 or 2, got {boundary}")
        return boundary

    def position(self, boundary: int, t):
        return _out(self._pos(self._wall(boundary), self._times(t)))

    def velocity(self, boundary: int, t):
        return _out(self._vel(self._wall(boundary), self._times(t)))

    def acceleration(self, boundary: int, t):
        return _out(self._acc(self._wall(boundary), self._times(t)))

    def length(self, t):
        return self.position(2, t) - self.position(1, t)

    def _acc(self, boundary, t):
        h = 1e-5 * self.duration
        lo = np.clip(t - h, 0.0, self.duration)
        hi = np.clip(t + h, 0.0, self.duration)
        return (self._vel(boundary, hi) - self._vel(boundary, lo)) / (hi - lo)

    def is_rigid(self, tol: float = 1e-12) -> bool:
        t = np.linspace(0.0, self.duration, 257)
        d = self.length(t)
        return bool(np.max(np.abs(d - d[0])) <= tol * max(1.0, abs(d[0])))

    def speed_bound(self) -> float | None:
        """Analytic upper bound on |dx_j/dt| when one is known."""
        return None

    def min_length_bound(self) -> float | None:
        return None

    def describe(self) -> dict:
        raise NotImplementedError


def _out(a):
    return float(a) if np.ndim(a) == 0 else a


@dataclass(frozen=True)
class StaticTrajectory(Trajectory):
    x1: float
    x2: float
    duration: float
    kind: str = field(default="static", init=False)

    def __post_init__(self):
        _check_duration(self.duration)

    def _pos(self, boundary, t):
        return np.full_like(t, self.x1 if boundary == 1 else self.x2)

    def _vel(self, boundary, t):
        return np.zeros_like(t)

    def _acc(self, boundary, t):
        return np.zeros_like(t)

    def speed_bound(self):
        return 0.0

    def min_length_bound(self):
        return self.x2 - self.x1

    def describe(self):
        return {"kind": self.kind, "x1": self.x1, "x2": self.x2, "T": self.duration}


@dataclass(frozen=True)
class OscillatingWall(Trajectory):
    """Wall 1 fixed at ``x1``; wall 2 at ``x2 + amplitude * sin(nu t)``.

    The run lasts ``p`` half periods, ``T = p pi / nu``, so the wall ends
    where it started.
    """

    x1: float
    x2: float
    amplitude: float
    nu: float
    p: int
    kind: str = field(default="oscillating-wall", init=False)

    def __post_init__(self):
        if not self.nu > 0:
            raise InvalidArgument(f"driving frequency must be positive, got {self.nu}")
        if int(self.p) != self.p or self.p < 1:
            raise InvalidArgument(f"p must be a positive integer, got {self.p}")
        object.__setattr__(self, "p", int(self.p))

    @property
    def duration(self) -> float:
        return self.p * np.pi / self.nu

    def characteristic_frequency(self):
        return self.nu

    def _pos(self, boundary, t):
        if boundary == 1:
            return np.full_like(t, self.x1)
        return self.x2 + self.amplitude * np.sin(self.nu * t)

    def _vel(self, boundary, t):
        if boundary == 1:
            return np.zeros_like(t)
        return self.amplitude * self.nu * np.cos(self.nu * t)

    def _acc(self, boundary, t):
        if boundary == 1:
            return np.zeros_like(t)
        return -self.amplitude * self.nu**2 * np.sin(self.nu * t)

    def speed_bound(self):
        return abs(self.amplitude) * self.nu

    def min_length_bound(self):
        return self.x2 - self.x1 - abs(self.amplitude)

    def describe(self):
        return {
            "kind": self.kind, "x1": self.x1, "x2": self.x2, "amplitude": self.amplitude,
            "nu": self.nu, "p": self.p, "T": self.duration,
        }


# quintic smoothstep and its derivatives: s(0)=0, s(1)=1, s' and s'' vanish at both ends
def _smoothstep(u):
    return u**3 * (10.0 - 15.0 * u + 6.0 * u**2)


def _smoothstep_d(u):
    return 30.0 * u**2 * (1.0 - u) ** 2


def _smoothstep_dd(u):
    return 60.0 * u * (1.0 - u) * (1.0 - 2.0 * u)


RIGID_PROFILES = ("smoothstep", "bump", "shake")


@dataclass(frozen=True)
class RigidTranslation(Trajectory):
    """Both walls displaced together by ``amplitude * D(t/T)``.

    Profiles, all with zero velocity at t = 0 and t = T:

    ``smoothstep``  quintic ramp from 0 to 1
    ``bump``        out and back, ``sin^2(pi u)``
    ``shake``       ``sin^2(pi u) sin(frequency t)``, a windowed oscillation
    """

    x1: float
    x2: float
    amplitude: float
    duration: float
    profile: str = "smoothstep"
    frequency: float = 0.0
    kind: str = field(default="rigid-translation", init=False)

    def __post_init__(self):
        _check_duration(self.duration)
        if self.profile not in RIGID_PROFILES:
            raise InvalidArgument(f"unknown rigid profile {self.profile!r}; expected one of {RIGID_PROFILES}")
        if self.profile == "shake" and not self.frequency > 0:
            raise InvalidArgument("the shake profile needs a positive frequency")

    def characteristic_frequency(self):
        return max(self.frequency, 2 * np.pi / self.duration)

    def _profile(self, t, order):
        T = self.duration
        u = t / T
        if self.profile == "smoothstep":
            return (_smoothstep, lambda u: _smoothstep_d(u) / T, lambda u: _smoothstep_dd(u) / T**2)[order](u)
        k = np.pi / T
        w = np.sin(k * t) ** 2
        dw = k * np.sin(2 * k * t)
        ddw = 2 * k**2 * np.cos(2 * k * t)
        if self.profile == "bump":
            return (w, dw, ddw)[order]
        f = self.frequency
        s, c = np.sin(f * t), np.cos(f * t)
        if order == 0:
            return w * s
        if order == 1:
            return dw * s + w * f * c
        return ddw * s + 2 * dw * f * c - w * f**2 * s

    def _pos(self, boundary, t):
        base = self.x1 if boundary == 1 else self.x2
        return base + self.amplitude * self._profile(t, 0)

    def _vel(self, boundary, t):
        return self.amplitude * self._profile(t, 1)

    def _acc(self, boundary, t):
        return self.amplitude * self._profile(t, 2)

    def speed_bound(self):
        a = abs(self.amplitude)
        if self.profile == "smoothstep":
            return a * 1.875 / self.duration
        if self.profile == "bump":
            return a * np.pi / self.duration
        return a * (np.pi / self.duration + self.frequency)

    def min_length_bound(self):
        return self.x2 - self.x1

    def describe(self):
        return {
            "kind": self.kind, "x1": self.x1, "x2": self.x2, "amplitude": self.amplitude,
            "T": self.duration, "profile": self.profile, "frequency": self.frequency,
        }


class TabulatedTrajectory(Trajectory):
    """Wall positions sampled at increasing times, joined by clamped cubic splines.

    Clamping sets the velocity to zero at both ends.
    """

    kind = "tabulated"

    def __init__(self, times, x1, x2):
        times = np.asarray(times, dtype=float)
        x1 = np.asarray(x1, dtype=float)
        x2 = np.asarray(x2, dtype=float)
        if times.ndim != 1 or times.size < 2 or x1.shape != times.shape or x2.shape != times.shape:
            raise InvalidArgument("tabulated trajectory needs matching 1-d arrays of at least two samples")
        if times[0] != 0.0 or np.any(np.diff(times) <= 0):
            raise InvalidArgument("tabulated times must start at 0 and increase strictly")
        self.times = times
        self.samples = (x1, x2)
        self.duration = float(times[-1])
        self._splines = tuple(CubicSpline(times, x, bc_type="clamped") for x in (x1, x2))

    def characteristic_frequency(self):
        return np.pi / np.min(np.diff(self.times))

    def _pos(self, boundary, t):
        return self._splines[boundary - 1](t)

    def _vel(self, boundary, t):
        return self._splines[boundary - 1](t, 1)

    def _acc(self, boundary, t):
        return self._splines[boundary - 1](t, 2)

    def describe(self):
        return {
            "kind": self.kind, "times": self.times.tolist(),
            "x1": self.samples[0].tolist(), "x2": self.samples[1].tolist(),
        }


class ConformalTrajectory(Trajectory):
    """A radial trajectory seen in tortoise coordinates.

    ``x_j(t) = tortoise(r_j(t))`` and ``dx_j/dt = (dr_j/dt) / f(r_j(t))``.
    """

    kind = "conformal"

    def __init__(self, radial: Trajectory, spacetime: SchwarzschildSpacetime):
        self.radial = radial
        self.spacetime = spacetime
        self.duration = radial.duration
        t = np.linspace(0.0, radial.duration, 2049)
        for j in (1, 2):
            r = radial.position(j, t)
            if np.min(r) <= spacetime.r_s:
                raise OutsideDomain(
                    f"wall {j} reaches r={np.min(r)} at or inside the horizon r_s={spacetime.r_s}"
                )

    def characteristic_frequency(self):
        return self.radial.characteristic_frequency()

    def _pos(self, boundary, t):
        return np.asarray(self.spacetime.tortoise(self.radial._pos(boundary, t)))

    def _vel(self, boundary, t):
        r = self.radial._pos(boundary, t)
        return self.radial._vel(boundary, t) / np.asarray(self.spacetime.lapse(r))

    def _acc(self, boundary, t):
        r = self.radial._pos(boundary, t)
        f = np.asarray(self.spacetime.lapse(r))
        rdot = self.radial._vel(boundary, t)
        # d/dt (rdot / f) with df/dr = r_s / r^2
        return self.radial._acc(boundary, t) / f - rdot**2 * self.spacetime.r_s / (r**2 * f**2)

    def speed_bound(self):
        bound = self.radial.speed_bound()
        if bound is None:
            return None
        # 1/f is largest at the innermost radius the walls reach
        t = np.linspace(0.0, self.duration, 2049)
        r_in = min(np.min(self.radial.position(1, t)), np.min(self.radial.position(2, t)))
        return bound / self.spacetime.lapse(r_in)

    def describe(self):
        return {"kind": self.kind, "r_s": self.spacetime.r_s, "radial": self.radial.describe()}


def _check_duration(T):
    if not (np.isfinite(T) and T > 0):
        raise InvalidArgument(f"duration must be positive, got {T}")


def position(traj: Trajectory, boundary: int, t):
    return traj.position(boundary, t)


def velocity(traj: Trajectory, boundary: int, t):
    return traj.velocity(boundary, t)


@dataclass
class TrajectoryReport:
    valid: bool
    max_speed: float
    min_length: float
    endpoint_speed: float
    violations: list

    @property
    def zero_endpoint_velocity(self) -> bool:
        return self.endpoint_speed == 0.0


def validate(traj: Trajectory, samples: int = 4001) -> TrajectoryReport:
    """Check subluminal walls and a positive cavity length.

    Sampling is combined with analytic bounds where the kind provides them.
    Endpoint velocities are reported but only flagged by callers that need
    them to vanish.
    """
    t = np.linspace(0.0, traj.duration, samples)
    speeds = np.maximum(np.abs(traj.velocity(1, t)), np.abs(traj.velocity(2, t)))
    lengths = traj.length(t)
    max_speed = float(speeds.max())
    min_length = float(lengths.min())
    bound = traj.speed_bound()
    if bound is not None:
        max_speed = max(max_speed, float(bound))
    lbound = traj.min_length_bound()
    if lbound is not None:
        min_length = min(min_length, float(lbound))
    ends = np.array([0.0, traj.duration])
    endpoint = float(np.max(np.abs(np.concatenate([traj.velocity(1, ends), traj.velocity(2, ends)]))))
    violations = []
    if max_speed >= 1.0:
        violations.append(f"superluminal wall: max |dx/dt| = {max_speed:.6g} >= 1")
    if min_length <= 0.0:
        violations.append(f"cavity collapse: minimum length {min_length:.6g} <= 0")
    return TrajectoryReport(not violations, max_speed, min_length, endpoint, violations)


@dataclass(frozen=True)
class OscillatingScenario:
    """Inner wall fixed at r0, outer wall at ``r0 + L0 + A sin(nu t)`` for ``T = p pi / nu``."""

    r0: float
    L0: float
    A: float
    nu: float
    p: int

    def __post_init__(self):
        if not self.L0 > 0:
            raise InvalidArgument(f"L0 must be positive, got {self.L0}")
        if not self.nu > 0:
            raise InvalidArgument(f"nu must be positive, got {self.nu}")
        if int(self.p) != self.p or self.p < 1:
            raise InvalidArgument(f"p must be a positive integer, got {self.p}")
        if not abs(self.A) < self.L0:
            raise InvalidArgument(f"amplitude |A|={abs(self.A)} must be below L0={self.L0}")
        object.__setattr__(self, "p", int(self.p))

    @property
    def epsilon(self) -> float:
        return self.A / self.L0

    @property
    def T(self) -> float:
        return self.p * math.pi / self.nu

    @property
    def outer_radius(self) -> float:
        return self.r0 + self.L0

    def omega0(self, m, st: SchwarzschildSpacetime):
        """Lowest-order frequency ``f(r0) m pi / L0``."""
        f0 = st.lapse(self.r0) if not st.is_flat else 1.0
        return f0 * np.asarray(m, dtype=float) * math.pi / self.L0

    def radial_trajectory(self) -> OscillatingWall:
        return OscillatingWall(self.r0, self.r0 + self.L0, self.A, self.nu, self.p)

    def conformal_trajectory(self, st: SchwarzschildSpacetime) -> Trajectory:
        from .spacetime import radial_to_conformal

        if not st.is_flat and self.r0 <= st.r_s:
            raise OutsideDomain(f"r0={self.r0} must exceed r_s={st.r_s}")
        return radial_to_conformal(st, self.radial_trajectory())

    def with_nu(self, nu: float) -> "OscillatingScenario":
        return OscillatingScenario(self.r0, self.L0, self.A, nu, self.p)

    @classmethod
    def at_resonance(cls, r0, L0, A, p, q, r, st: SchwarzschildSpacetime, branch: str = "main"):
        """Scenario driven exactly at ``w_q + w_r`` (main) or half of it (subharmonic)."""
        f0 = 1.0 if st.is_flat else st.lapse(r0)
        total = f0 * (q + r) * math.pi / L0
        if branch == "main":
            nu = total
        elif branch == "subharmonic":
            nu = 0.5 * total
        else:
            raise InvalidArgument(f"branch must be 'main' or 'subharmonic', got {branch!r}")
        return cls(r0, L0, A, nu, p)

    def flat_equivalent(self, st: SchwarzschildSpacetime) -> "OscillatingScenario":
        """The flat-space run an observer at r0 would call identical.

        Lengths and times are converted to that observer's proper units, so
        epsilon, p and the products w_m T and nu T are unchanged.
        """
        if st.is_flat:
            return self
        s = math.sqrt(st.lapse(self.r0))
        return OscillatingScenario(self.r0, self.L0 / s, self.A / s, self.nu / s, self.p)
