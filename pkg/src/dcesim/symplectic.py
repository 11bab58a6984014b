"""Bogoliubov transformations stored as their (alpha, beta) blocks.

The full matrix is ``S = [[alpha, beta], [conj(beta), conj(alpha)]]``; only the
top block row is kept because the bottom row is its conjugate.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgument

__all__ = [
    "BogoliubovTransform",
    "FrequencyMatrix",
    "ParticleSpectrum",
    "compose",
    "identity_residuals",
    "phase_evolution",
    "vacuum_particle_numbers",
]


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=complex, copy=True)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class BogoliubovTransform:
    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        alpha = _frozen(self.alpha)
        beta = _frozen(self.beta)
        if alpha.ndim != 2 or alpha.shape[0] != alpha.shape[1]:
            raise InvalidArgument(f"alpha must be square, got shape {alpha.shape}")
        if beta.shape != alpha.shape:
            raise InvalidArgument(f"alpha {alpha.shape} and beta {beta.shape} differ in shape")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def n_modes(self) -> int:
        return self.alpha.shape[0]

    @classmethod
    def identity(cls, n_modes: int) -> "BogoliubovTransform":
        return cls(np.eye(n_modes), np.zeros((n_modes, n_modes)))

    @classmethod
    def from_matrix(cls, s: np.ndarray) -> "BogoliubovTransform":
        """Take the top block row of a full 2N x 2N matrix."""
        n = s.shape[0] // 2
        return cls(s[:n, :n], s[:n, n:])

    def matrix(self) -> np.ndarray:
        return np.block([[self.alpha, self.beta], [self.beta.conj(), self.alpha.conj()]])

    def inverse(self) -> "BogoliubovTransform":
        """Symplectic inverse ``K S^dagger K``."""
        return BogoliubovTransform(self.alpha.conj().T, -self.beta.T)

    def then(self, second: "BogoliubovTransform") -> "BogoliubovTransform":
        return compose(second, self)

    def particle_numbers(self) -> "ParticleSpectrum":
        return vacuum_particle_numbers(self)

    def residuals(self, interior: int | None = None) -> tuple[float, float]:
        return identity_residuals(self, interior)

    def to_dict(self) -> dict:
        return {
            "n_modes": self.n_modes,
            "alpha_re": self.alpha.real.ravel().tolist(),
            "alpha_im": self.alpha.imag.ravel().tolist(),
            "beta_re": self.beta.real.ravel().tolist(),
            "beta_im": self.beta.imag.ravel().tolist(),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "BogoliubovTransform":
        try:
            n = int(data["n_modes"])
            shape = (n, n)
            alpha = np.asarray(data["alpha_re"], float) + 1j * np.asarray(data["alpha_im"], float)
            beta = np.asarray(data["beta_re"], float) + 1j * np.asarray(data["beta_im"], float)
            return cls(alpha.reshape(shape), beta.reshape(shape))
        except (KeyError, ValueError, TypeError) as exc:
            raise InvalidArgument(f"malformed transform record: {exc}") from exc

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "BogoliubovTransform":
        return cls.from_dict(json.loads(text))

    def allclose(self, other: "BogoliubovTransform", atol: float = 1e-12) -> bool:
        return (
            self.n_modes == other.n_modes
            and np.allclose(self.alpha, other.alpha, rtol=0, atol=atol)
            and np.allclose(self.beta, other.beta, rtol=0, atol=atol)
        )


def compose(second: BogoliubovTransform, first: BogoliubovTransform) -> BogoliubovTransform:
    """Apply ``first`` then ``second``: the block product ``S2 @ S1``."""
    if second.n_modes != first.n_modes:
        raise InvalidArgument(
            f"cannot compose transforms on {second.n_modes} and {first.n_modes} modes"
        )
    a2, b2 = second.alpha, second.beta
    a1, b1 = first.alpha, first.beta
    return BogoliubovTransform(a2 @ a1 + b2 @ b1.conj(), a2 @ b1 + b2 @ a1.conj())


def identity_residuals(s: BogoliubovTransform, interior: int | None = None) -> tuple[float, float]:
    """Max-norm violations of ``aa^+ - bb^+ = I`` and ``ab^T - ba^T = 0``.

    Both products are formed on the full truncation and then restricted to
    the leading ``interior`` x ``interior`` block (default N // 2, at least 1).
    """
    n = s.n_modes
    if interior is None:
        interior = max(1, n // 2)
    if not 0 < interior <= n:
        raise InvalidArgument(f"interior block size must be in 1..{n}, got {interior}")
    a, b = s.alpha, s.beta
    k = slice(0, interior)
    r1 = (a[k] @ a[k].conj().T - b[k] @ b[k].conj().T) - np.eye(interior)
    r2 = a[k] @ b[k].T - b[k] @ a[k].T
    return float(np.abs(r1).max()), float(np.abs(r2).max())


@dataclass(frozen=True, eq=False)
class FrequencyMatrix:
    """Positive mode frequencies; the full matrix is diag(w, -w)."""

    omegas: np.ndarray

    def __post_init__(self):
        w = np.array(self.omegas, dtype=float, copy=True).ravel()
        if w.size == 0 or not np.all(w > 0) or not np.all(np.diff(w) > 0):
            raise InvalidArgument("frequencies must be positive and strictly increasing")
        w.setflags(write=False)
        object.__setattr__(self, "omegas", w)

    @property
    def n_modes(self) -> int:
        return self.omegas.size

    def matrix(self) -> np.ndarray:
        return np.diag(np.concatenate([self.omegas, -self.omegas]))


def phase_evolution(omegas: FrequencyMatrix, t: float) -> BogoliubovTransform:
    if not np.isfinite(t):
        raise InvalidArgument("time must be finite")
    n = omegas.n_modes
    return BogoliubovTransform(np.diag(np.exp(1j * omegas.omegas * t)), np.zeros((n, n)))


@dataclass(frozen=True, eq=False)
class ParticleSpectrum:
    mean_particles: np.ndarray

    @property
    def total(self) -> float:
        return float(self.mean_particles.sum())

    def __len__(self):
        return self.mean_particles.size


def vacuum_particle_numbers(s: BogoliubovTransform) -> ParticleSpectrum:
    """Mean occupation of each mode after acting on the vacuum.

    The sum runs over the first index of beta: ``N_m = sum_n |beta_nm|^2``.
    """
    numbers = (np.abs(s.beta) ** 2).sum(axis=0)
    numbers.setflags(write=False)
    return ParticleSpectrum(numbers)
