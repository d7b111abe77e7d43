"""Truncated Fock-space vectors and operators.

Ladder operators are dense ``dim x dim`` complex matrices in the number basis
``|0>, |1>, ..., |dim-1>``.  Unitaries (displacement, squeezing) are obtained
by exponentiating the truncated generator on a padded space of ``dim + guard``
levels and cropping back to ``dim``; the truncation error of the generator
then lives in the discarded guard band.

Quadrature convention: ``x = (a + a^dag)/sqrt(2)``, ``p = (a - a^dag)/(i sqrt(2))``,
so the coherent state ``|alpha>`` is centred at ``x = sqrt(2) Re(alpha)`` and
``S[r] = exp(r (a^2 - a^dag^2)/2)`` with ``r > 0`` contracts the x wavefunction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.linalg import expm

from .errors import TruncationOverflow

DEFAULT_GUARD = 20


@dataclass(frozen=True)
class TruncationPolicy:
    target_tail: float = 1e-12
    guard: int = DEFAULT_GUARD
    max_dim: int = 600

    def __post_init__(self):
        if self.target_tail <= 0:
            raise ValueError("target_tail must be positive")
        if self.guard < 0:
            raise ValueError("guard must be non-negative")
        if self.max_dim < 1:
            raise ValueError("max_dim must be positive")

    def suggest_dim(self, n: int = 0, alpha: complex = 0.0, r: float = 0.0,
                    beta: complex = 0.0) -> int:
        """Starting cutoff for a state built from ``|n>`` with the given
        displacement, squeeze and coherent amplitudes.

        Photon-number spread grows like ``e^{2|r|}`` under squeezing, so the
        estimate is taken on that scale and padded by several standard
        deviations.  Callers must still verify the tail mass.
        """
        mean = math.exp(2 * abs(r)) * (n + 1 + 2 * abs(alpha) ** 2) + abs(beta) ** 2
        width = 12 * math.sqrt(mean + 1) + 10
        return int(math.ceil(mean + width)) + self.guard


@dataclass(frozen=True, eq=False)
class FockVector:
    """Complex amplitudes over the truncated number basis.

    ``amps[k]`` is the amplitude of ``|k>``.  ``guard`` marks how many of the
    top levels are treated as the truncation band when reporting
    :attr:`tail_mass`.
    """

    amps: np.ndarray
    guard: int = DEFAULT_GUARD

    def __post_init__(self):
        arr = np.array(self.amps, dtype=complex).reshape(-1)
        if arr.size < 1:
            raise ValueError("FockVector needs at least one level")
        arr.setflags(write=False)
        object.__setattr__(self, "amps", arr)

    @property
    def dim(self) -> int:
        return self.amps.size

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    @property
    def tail_mass(self) -> float:
        start = max(self.dim - self.guard, 0)
        return float(np.sum(np.abs(self.amps[start:]) ** 2))

    @property
    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def normalized(self) -> "FockVector":
        nrm = self.norm
        if nrm == 0:
            raise ValueError("cannot normalize the zero vector")
        return FockVector(self.amps / nrm, self.guard)

    def resized(self, dim: int) -> "FockVector":
        """Zero-pad or crop to ``dim`` levels."""
        out = np.zeros(dim, dtype=complex)
        k = min(dim, self.dim)
        out[:k] = self.amps[:k]
        return FockVector(out, self.guard)

    def inner(self, other: "FockVector") -> complex:
        """``<self|other>`` after padding both to a common dimension."""
        dim = max(self.dim, other.dim)
        return complex(np.vdot(self.resized(dim).amps, other.resized(dim).amps))

    def __len__(self):
        return self.dim


def basis(n: int, dim: int, guard: int = DEFAULT_GUARD) -> FockVector:
    if not 0 <= n < dim:
        raise ValueError(f"level {n} outside truncation {dim}")
    v = np.zeros(dim, dtype=complex)
    v[n] = 1.0
    return FockVector(v, guard)


def _readonly(m: np.ndarray) -> np.ndarray:
    m.setflags(write=False)
    return m


@lru_cache(maxsize=64)
def annihilation(dim: int) -> np.ndarray:
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return _readonly(np.diag(np.sqrt(np.arange(1, dim)), k=1).astype(complex))


def creation(dim: int) -> np.ndarray:
    return annihilation(dim).conj().T


@lru_cache(maxsize=64)
def number(dim: int) -> np.ndarray:
    return _readonly(np.diag(np.arange(dim)).astype(complex))


@lru_cache(maxsize=64)
def parity(dim: int) -> np.ndarray:
    return _readonly(np.diag((-1.0) ** np.arange(dim)).astype(complex))


def _check_dim(dim: int, guard: int, max_dim: int | None):
    if dim < 1:
        raise ValueError("dim must be >= 1")
    if max_dim is not None and dim + guard > max_dim:
        raise TruncationOverflow(
            f"padded dimension {dim + guard} exceeds cap {max_dim}")


@lru_cache(maxsize=256)
def _displacement_cached(alpha: complex, dim: int, guard: int) -> np.ndarray:
    big = dim + guard
    a = annihilation(big)
    gen = alpha * a.conj().T - np.conj(alpha) * a
    return _readonly(np.ascontiguousarray(expm(gen)[:dim, :dim]))


@lru_cache(maxsize=256)
def _squeeze_cached(xi: complex, dim: int, guard: int) -> np.ndarray:
    big = dim + guard
    a = annihilation(big)
    a2 = a @ a
    gen = 0.5 * (np.conj(xi) * a2 - xi * a2.conj().T)
    return _readonly(np.ascontiguousarray(expm(gen)[:dim, :dim]))


def displacement(alpha: complex, dim: int, guard: int = DEFAULT_GUARD,
                 max_dim: int | None = None) -> np.ndarray:
    """``D[alpha] = exp(alpha a^dag - alpha* a)`` cropped to ``dim`` levels."""
    _check_dim(dim, guard, max_dim)
    return _displacement_cached(complex(alpha), int(dim), int(guard))


def squeeze(xi: complex, dim: int, guard: int = DEFAULT_GUARD,
            max_dim: int | None = None) -> np.ndarray:
    """``S[xi] = exp((xi* a^2 - xi a^dag^2)/2)`` cropped to ``dim`` levels.

    For real ``xi = r > 0`` the x-quadrature variance of ``S[r]|0>`` is
    ``e^{-2r}/2``.
    """
    _check_dim(dim, guard, max_dim)
    return _squeeze_cached(complex(xi), int(dim), int(guard))


def apply(op: np.ndarray, psi: FockVector) -> FockVector:
    if op.shape != (psi.dim, psi.dim):
        raise ValueError(f"operator shape {op.shape} does not match dim {psi.dim}")
    return FockVector(op @ psi.amps, psi.guard)


def expectation(op: np.ndarray, psi: FockVector) -> complex:
    """``<psi|op|psi>``."""
    if op.shape != (psi.dim, psi.dim):
        raise ValueError(f"operator shape {op.shape} does not match dim {psi.dim}")
    return complex(np.vdot(psi.amps, op @ psi.amps))


def number_moments(psi: FockVector) -> tuple[float, float]:
    """Mean photon number and number variance of a normalized state."""
    probs = psi.probabilities
    k = np.arange(psi.dim)
    mean = float(probs @ k)
    var = float(probs @ (k - mean) ** 2)
    return mean, var
