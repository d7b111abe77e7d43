"""Wigner functions and displaced-state overlaps.

Convention (hbar = 1): ``x = (a + a^dag)/sqrt(2)`` and

    W(x, p) = (1/pi) ∫ dy <x-y|psi><psi|x+y> e^{2ipy}
            = (1/pi) sum_k (-1)^k |<k|D(-z)|psi>|^2,   z = (x + ip)/sqrt(2).

The grid evaluation expands the displaced-parity sum in number-basis
matrix elements ``W_{mn}(z)``, which obey a two-index recurrence, so no
per-point matrix exponential is needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.optimize import minimize_scalar

from . import fock
from .fock import FockVector
from .hermite import hermite_functions

SQRT2 = math.sqrt(2.0)


@dataclass(frozen=True)
class PhaseSpaceGrid:
    x_min: float = -6.0
    x_max: float = 6.0
    p_min: float = -6.0
    p_max: float = 6.0
    nx: int = 256
    np: int = 256

    def __post_init__(self):
        if self.nx < 2 or self.np < 2:
            raise ValueError("grid needs at least two points per axis")
        if not (self.x_max > self.x_min and self.p_max > self.p_min):
            raise ValueError("grid ranges must be nondegenerate")

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x_min, self.x_max, self.nx)

    @property
    def ps(self) -> np.ndarray:
        return np.linspace(self.p_min, self.p_max, self.np)

    def shifted(self, dx: float, dp: float) -> "PhaseSpaceGrid":
        return PhaseSpaceGrid(self.x_min + dx, self.x_max + dx,
                              self.p_min + dp, self.p_max + dp, self.nx, self.np)

    def as_dict(self) -> dict:
        return {"x_min": self.x_min, "x_max": self.x_max, "p_min": self.p_min,
                "p_max": self.p_max, "nx": self.nx, "np": self.np}


@dataclass(frozen=True, eq=False)
class WignerField:
    grid: PhaseSpaceGrid
    values: np.ndarray  # shape (nx, np); values[i, j] = W(xs[i], ps[j])

    def integral(self) -> float:
        return float(integrate.trapezoid(integrate.trapezoid(self.values, self.grid.ps, axis=1),
                                         self.grid.xs))


def wigner_points(psi: FockVector, x, p) -> np.ndarray:
    """Wigner function of a pure state at arbitrary points ``(x, p)`` (broadcast)."""
    x, p = np.broadcast_arrays(np.asarray(x, float), np.asarray(p, float))
    z = (x + 1j * p) / SQRT2
    c = psi.amps
    # drop top levels whose total weight cannot reach double precision
    tail = np.cumsum((np.abs(c) ** 2)[::-1])[::-1]
    keep = np.flatnonzero(tail > 1e-30)
    dim = int(keep[-1]) + 1 if keep.size else 1
    c = c[:dim]
    two_z = 2 * z
    # w[n] holds W_{m,n}(z) for the current row m, starting at m = 0
    w = [np.exp(-2 * np.abs(z) ** 2) / np.pi]
    for n in range(1, dim):
        w.append(two_z * w[n - 1] / math.sqrt(n))
    total = np.real(abs(c[0]) ** 2 * w[0])
    for n in range(1, dim):
        total = total + 2 * np.real(c[0] * np.conj(c[n]) * w[n])
    two_zc = np.conj(two_z)
    for m in range(1, dim):
        temp = w[m]
        w[m] = (two_zc * temp - math.sqrt(m) * w[m - 1]) / math.sqrt(m)
        total = total + abs(c[m]) ** 2 * np.real(w[m])
        for n in range(m + 1, dim):
            nxt = (two_z * w[n - 1] - math.sqrt(m) * temp) / math.sqrt(n)
            temp = w[n]
            w[n] = nxt
            total = total + 2 * np.real(c[m] * np.conj(c[n]) * w[n])
    return total


def wigner(psi: FockVector, grid: PhaseSpaceGrid | None = None) -> WignerField:
    """Evaluate ``W`` on a rectangular grid."""
    grid = grid or PhaseSpaceGrid()
    X, P = np.meshgrid(grid.xs, grid.ps, indexing="ij")
    return WignerField(grid, wigner_points(psi, X, P))


def wavefunction(psi: FockVector, x) -> np.ndarray:
    """``<x|psi>`` from the number-basis amplitudes."""
    x = np.asarray(x, dtype=float)
    basis = hermite_functions(psi.dim - 1, x)
    return np.tensordot(psi.amps, basis, axes=(0, 0))


def wigner_by_integral(wavefn, x: float, p: float, y_max: float = 8.0) -> float:
    """Direct quadrature of the defining y-integral.

    ``wavefn`` maps position arrays to complex amplitudes; ``|y| <= y_max``.
    """
    def integrand(y, part):
        val = wavefn(np.array([x - y]))[0] * np.conj(wavefn(np.array([x + y]))[0]) \
            * np.exp(2j * p * y)
        return val.real if part == 0 else val.imag
    opts = dict(epsabs=1e-13, epsrel=1e-12, limit=400)
    re = integrate.quad(integrand, -y_max, y_max, args=(0,), **opts)[0]
    return re / np.pi


def marginal_x(field: WignerField) -> np.ndarray:
    """``∫ W dp`` per x sample (trapezoid rule)."""
    return integrate.trapezoid(field.values, field.grid.ps, axis=1)


def marginal_p(field: WignerField) -> np.ndarray:
    return integrate.trapezoid(field.values, field.grid.xs, axis=0)


def purity(field: WignerField) -> float:
    """``2 pi ∫ W^2``; equals 1 for a pure state resolved by the grid."""
    sq = field.values ** 2
    return float(2 * np.pi * integrate.trapezoid(
        integrate.trapezoid(sq, field.grid.ps, axis=1), field.grid.xs))


def displaced_overlap(psi: FockVector, delta: complex, guard: int = fock.DEFAULT_GUARD) -> float:
    """``|<psi|D[delta]|psi>|^2`` using a displacement matrix on a padded cutoff."""
    delta = complex(delta)
    if delta == 0:
        return 1.0
    dim = psi.dim + int(math.ceil(abs(delta) ** 2 + 6 * abs(delta))) + 5
    v = psi.resized(dim)
    D = fock.displacement(delta, dim, guard)
    val = abs(np.vdot(v.amps, D @ v.amps)) ** 2
    return float(min(val, 1.0 + 1e-12))


def overlap_via_wigner(psi: FockVector, delta: complex,
                       grid: PhaseSpaceGrid | None = None) -> float:
    """``2 pi ∫ W(x, p) W(x + dx, p + dp)`` with ``(dx, dp) = sqrt(2) (Re, Im) delta``."""
    grid = grid or PhaseSpaceGrid()
    delta = complex(delta)
    dx, dp = SQRT2 * delta.real, SQRT2 * delta.imag
    X, P = np.meshgrid(grid.xs, grid.ps, indexing="ij")
    w0 = wigner_points(psi, X, P)
    w1 = wigner_points(psi, X + dx, P + dp)
    prod = w0 * w1
    return float(2 * np.pi * integrate.trapezoid(
        integrate.trapezoid(prod, grid.ps, axis=1), grid.xs))


def wigner_inner(psi: FockVector, phi: FockVector, grid: PhaseSpaceGrid | None = None) -> float:
    """``2 pi ∫ W_psi W_phi``, which equals ``|<psi|phi>|^2`` for pure states."""
    grid = grid or PhaseSpaceGrid()
    wa = wigner(psi, grid).values
    wb = wigner(phi, grid).values
    return float(2 * np.pi * integrate.trapezoid(
        integrate.trapezoid(wa * wb, grid.ps, axis=1), grid.xs))


class OverlapProfile:
    """``eps -> O(eps e^{i theta})`` along one ray, vectorized in ``eps``.

    The displacement along the ray is ``exp(-i eps G)`` with the Hermitian
    generator ``G = i(e^{i theta} a^dag - e^{-i theta} a)``.  Diagonalizing
    ``G`` once on a cutoff padded for ``eps <= eps_max`` makes each evaluation
    a weighted sum of phases; on that cutoff it equals :func:`displaced_overlap`.
    """

    def __init__(self, psi: FockVector, theta: float = 0.0, eps_max: float = 3.0,
                 guard: int = fock.DEFAULT_GUARD):
        if eps_max <= 0:
            raise ValueError("eps_max must be positive")
        self.theta = float(theta)
        self.eps_max = float(eps_max)
        dim = psi.dim + int(math.ceil(eps_max ** 2 + 6 * eps_max)) + 5 + guard
        a = fock.annihilation(dim)
        G = 1j * (np.exp(1j * theta) * a.conj().T - np.exp(-1j * theta) * a)
        lam, vecs = np.linalg.eigh(G)
        self._lam = lam
        self._weights = np.abs(vecs.conj().T @ psi.resized(dim).amps) ** 2

    def __call__(self, eps):
        eps = np.asarray(eps, dtype=float)
        amp = np.exp(-1j * np.multiply.outer(eps, self._lam)) @ self._weights
        return np.minimum(np.abs(amp) ** 2, 1.0)


def first_zero(psi: FockVector, theta: float = 0.0, eps_max: float = 3.0,
               samples: int = 600, tol: float = 1e-10) -> float | None:
    """Smallest ``eps > 0`` where ``O(eps e^{i theta})`` reaches its first minimum/zero.

    Scans for the first local minimum of the overlap along the ray and, if the
    overlap there is numerically zero, refines its location; returns ``None``
    when no minimum below 1e-6 exists up to ``eps_max``.
    """
    profile = OverlapProfile(psi, theta, eps_max)
    eps = np.linspace(0.0, eps_max, samples + 1)[1:]
    vals = profile(eps)
    for i in range(1, len(vals) - 1):
        if vals[i] <= vals[i - 1] and vals[i] <= vals[i + 1]:
            res = minimize_scalar(lambda e: float(profile(e)),
                                  bracket=(eps[i - 1], eps[i], eps[i + 1]),
                                  options={"xtol": tol})
            if res.fun < 1e-6:
                return float(res.x)
            return None
    return None
