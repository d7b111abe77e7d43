"""Reference values computed without the package's closed forms.

Each function here uses a different mechanism from the code it checks:
explicit power series, exact Gauss-Hermite rules, or dense linear algebra.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.polynomial import hermite as nph


def hermite_series(n: int, x: float) -> float:
    """``H_n(x) = n! sum_k (-1)^k (2x)^(n-2k) / (k! (n-2k)!)``."""
    return math.factorial(n) * sum(
        (-1) ** k * (2 * x) ** (n - 2 * k) / (math.factorial(k) * math.factorial(n - 2 * k))
        for k in range(n // 2 + 1))


def gauss_hermite_exact(A, B, d=0.0, gamma=0.0, delta=0.0, n=0, m=0) -> complex:
    """The Hermite-Gaussian cross integral by an exact Gauss-Hermite rule.

    The exponent is ``-S x^2 / 2 + L x + C``.  Completing the square with the
    (possibly complex) centre ``x0 = L/S`` leaves a polynomial of degree
    ``n + m`` against ``exp(-S (x - x0)^2 / 2)``; shifting the contour to the
    centre is exact for such entire integrands, and ``hermgauss`` with enough
    nodes integrates the polynomial exactly.
    """
    S = A * A + B * B
    L = A * gamma + B * delta + B * d
    C = -delta * d - d * d / 2
    x0 = L / S
    nodes, weights = nph.hermgauss((n + m) // 2 + 8)
    scale = math.sqrt(2 / S)
    x = x0 + scale * nodes
    cn = np.zeros(n + 1)
    cn[n] = 1
    cm = np.zeros(m + 1)
    cm[m] = 1
    poly = nph.hermval(A * x, cn) * nph.hermval(B * x - d, cm)
    return complex(scale * np.exp(C + L * L / (2 * S)) * np.sum(weights * poly))


def coherent_series(alpha: complex, dim: int) -> np.ndarray:
    k = np.arange(dim)
    logf = np.array([math.lgamma(j + 1) for j in k])
    return np.exp(-abs(alpha) ** 2 / 2) * alpha ** k / np.exp(0.5 * logf)


def squeezed_vacuum_series(r: float, dim: int) -> np.ndarray:
    """``(-tanh r)^m sqrt((2m)!) / (2^m m! sqrt(cosh r))`` on even levels."""
    out = np.zeros(dim)
    for m in range(dim // 2 + (dim % 2)):
        if 2 * m >= dim:
            break
        log_mag = (0.5 * math.lgamma(2 * m + 1) - m * math.log(2) - math.lgamma(m + 1))
        out[2 * m] = (-math.tanh(r)) ** m * math.exp(log_mag) / math.sqrt(math.cosh(r))
    return out


def number_eigen(H: np.ndarray):
    return np.linalg.eigh(H)
