"""Hermite-Gaussian integrals in closed form, with a quadrature oracle.

The central identity evaluates

    J = ∫ H_n(A x) H_m(B x - d) exp(-(A x)^2/2 + γ A x + δ (B x - d) - (B x - d)^2/2) dx

for real nonzero ``A``, ``B``.  It follows from the Hermite generating
function: the Gaussian integral of ``exp(2 s A x - s^2) exp(2 t (B x - d) - t^2)``
against the weight is ``exp(a s^2 - a t^2 + c s t + p s + q t)`` up to a
constant, and the coefficient of ``s^n t^m`` is a finite sum over the cross
term ``c s t``.  When ``|A| != |B|`` the pure-square terms are absorbed into
Hermite polynomials of rescaled arguments (:func:`_closed_unequal`); when
``A = ±B`` they vanish and the sum is over plain powers (:func:`_closed_equal`).

Oscillator wavefunctions follow the convention ``x = (a + a^dag)/sqrt(2)``:
``<x|S[r] D[alpha]|n> = phi_n(x; r, alpha)`` for real ``alpha``, with

    phi_n(x; r, alpha) = sqrt(e^r) exp(-u^2/2) H_n(u) / sqrt(2^n n! sqrt(pi)),
    u = e^r x - sqrt(2) alpha.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy import integrate

from .errors import DegenerateParams

MAX_DEGREE = 400
# beyond this the alternating closed-form sums start losing digits
LITERAL_DEGREE = 40
SQRT2 = math.sqrt(2.0)


def _check_degree(*ks: int):
    for k in ks:
        if k < 0 or k > MAX_DEGREE:
            raise ValueError(f"polynomial degree {k} outside [0, {MAX_DEGREE}]")


def hermite_poly(n: int, x):
    """Physicists' Hermite polynomial by three-term recurrence.

    Accepts real or complex scalars and arrays.
    """
    _check_degree(n)
    x = np.asarray(x)
    h_prev = np.ones_like(x, dtype=np.result_type(x, float))
    if n == 0:
        return h_prev if h_prev.ndim else h_prev[()]
    h = 2 * x * h_prev
    for k in range(1, n):
        h_prev, h = h, 2 * x * h - 2 * k * h_prev
    return h if np.ndim(h) else h[()]


def hermite_functions(nmax: int, x) -> np.ndarray:
    """Normalized oscillator eigenfunctions ``<x|k>`` for ``k = 0..nmax``.

    Returns an array of shape ``(nmax + 1,) + x.shape``.  The normalized
    recurrence keeps values O(1) for large ``k``.
    """
    x = np.asarray(x, dtype=float)
    out = np.empty((nmax + 1,) + x.shape)
    out[0] = np.pi ** -0.25 * np.exp(-x * x / 2)
    if nmax >= 1:
        out[1] = SQRT2 * x * out[0]
    for k in range(1, nmax):
        out[k + 1] = (SQRT2 * x * out[k] - math.sqrt(k) * out[k - 1]) / math.sqrt(k + 1)
    return out


def phi_n(n: int, x, r: float = 0.0, alpha: complex = 0.0):
    """Squeezed, displaced number-state wavefunction ``phi_n(e^r x - sqrt(2) alpha)``.

    Includes the ``sqrt(e^r)`` Jacobian so that it is normalized in ``x``.
    For complex ``alpha`` this is the analytic continuation in the shift
    (no conjugation), which is what the overlap closed forms need.
    """
    _check_degree(n)
    u = math.exp(r) * np.asarray(x) - SQRT2 * alpha
    # normalized recurrence: h_k = H_k(u) / sqrt(2^k k!)
    h_prev = np.ones_like(u, dtype=np.result_type(u, float))
    h = h_prev
    if n >= 1:
        h = SQRT2 * u * h_prev
        for k in range(1, n):
            h_prev, h = h, (SQRT2 * u * h - math.sqrt(k) * h_prev) / math.sqrt(k + 1)
    val = math.exp(r / 2) * np.pi ** -0.25 * np.exp(-u * u / 2) * h
    return val if np.ndim(val) else val[()]


@dataclass(frozen=True)
class GaussHermiteParams:
    A: float
    B: float
    d: complex = 0.0
    gamma: complex = 0.0
    delta: complex = 0.0
    n: int = 0
    m: int = 0

    def __post_init__(self):
        for name in ("A", "B"):
            v = getattr(self, name)
            if not np.isfinite(v) or v == 0:
                raise DegenerateParams(f"{name} must be finite and nonzero, got {v}")
            if isinstance(v, complex) or np.iscomplexobj(v):
                raise DegenerateParams(f"{name} must be real")
        for name in ("d", "gamma", "delta"):
            if not np.isfinite(getattr(self, name)):
                raise DegenerateParams(f"{name} must be finite")
        _check_degree(self.n, self.m)


def _pair_coeff(n: int, m: int, j: int) -> float:
    # m! n! / (j! (m-j)! (n-j)!)
    return math.comb(m, j) * math.comb(n, j) * math.factorial(j)


def _closed_unequal(p: GaussHermiteParams) -> complex:
    A, B, d, g, de, n, m = p.A, p.B, p.d, p.gamma, p.delta, p.n, p.m
    S = A * A + B * B
    D = A * A - B * B
    log_pref = 0.5 * math.log(2 * math.pi / S)
    expo = -(B * g - A * (d + de)) ** 2 / (2 * S) + (g * g + de * de) / 2
    # principal branch on each fractional power separately; the products
    # t_m^k H_k(X1) and t_n^k H_k(X2) are then branch-consistent
    t_m = np.sqrt(complex(D / S))
    t_n = np.sqrt(complex(-D / S))
    x1 = (B * g * A - A * A * d + B * B * de) / np.sqrt(complex(D * S))
    x2 = A * (A * g + B * (d + de)) / np.sqrt(complex(-D * S))
    cross = 4 * A * B / np.sqrt(complex(-D * D))
    total = 0j
    for j in range(min(m, n) + 1):
        total += (_pair_coeff(n, m, j) * cross ** j
                  * hermite_poly(m - j, x1) * hermite_poly(n - j, x2))
    return complex(np.exp(log_pref + expo) * t_m ** m * t_n ** n * total)


def _closed_equal(p: GaussHermiteParams) -> complex:
    A, B, d, g, de, n, m = p.A, p.B, p.d, p.gamma, p.delta, p.n, p.m
    s = 1.0 if A == B else -1.0
    pref = math.sqrt(math.pi) / abs(A)
    expo = -(s * g - d - de) ** 2 / 4 + (g * g + de * de) / 2
    u = s * g - d + de
    v = s * g + d + de
    total = 0j
    for j in range(min(m, n) + 1):
        total += _pair_coeff(n, m, j) * 2.0 ** j * u ** (m - j) * v ** (n - j)
    # the s^n factor comes from H_n's parity when B = -A
    return complex(pref * np.exp(expo) * s ** n * total)


def _closed_scaled_sum(p: GaussHermiteParams) -> complex:
    """``J / sqrt(2^(n+m) n! m!)`` for degrees where the finite sums cancel badly.

    Both closed-form sums alternate in sign, and beyond degree ~50 they lose
    digits roughly geometrically.  Completing the square instead leaves a
    degree ``n + m`` polynomial against ``exp(-S (x - x0)^2 / 2)`` with
    ``x0 = L/S`` (complex for complex shifts; moving the contour is exact
    for this entire integrand), so a Gauss-Hermite rule with
    ``(n + m)/2 + 1`` nodes is exact.  The Hermite factors are evaluated
    through the normalized recurrence, so nothing overflows.
    """
    A, B, d, g, de, n, m = p.A, p.B, p.d, p.gamma, p.delta, p.n, p.m
    S = A * A + B * B
    L = A * g + B * (de + d)
    C = -de * d - d * d / 2
    nodes, weights = _hermgauss((n + m) // 2 + 4)
    scale = math.sqrt(2 / S)
    x = L / S + scale * nodes
    vals = _normalized_hermite(n, A * x) * _normalized_hermite(m, B * x - d)
    return complex(scale * np.exp(C + L * L / (2 * S)) * np.sum(weights * vals))


@lru_cache(maxsize=64)
def _hermgauss(k: int):
    return np.polynomial.hermite.hermgauss(k)


def _normalized_hermite(k: int, u) -> np.ndarray:
    """``H_k(u) / sqrt(2^k k!)`` by the normalized three-term recurrence."""
    u = np.asarray(u, dtype=complex)
    h_prev = np.ones_like(u)
    if k == 0:
        return h_prev
    h = SQRT2 * u
    for j in range(1, k):
        h_prev, h = h, (SQRT2 * u * h - math.sqrt(j) * h_prev) / math.sqrt(j + 1)
    return h


def gauss_hermite_closed(p: GaussHermiteParams) -> complex:
    """Closed-form value of the Hermite-Gaussian cross integral ``J``.

    Dispatches to the equal-scale form when ``|A| == |B|`` exactly and to the
    general form otherwise; above ``LITERAL_DEGREE`` the exact scaled rule
    of :func:`_closed_scaled_sum` takes over.
    """
    if max(p.n, p.m) > LITERAL_DEGREE:
        log_scale = 0.5 * ((p.n + p.m) * math.log(2.0)
                           + math.lgamma(p.n + 1) + math.lgamma(p.m + 1))
        return complex(_closed_scaled_sum(p) * math.exp(log_scale))
    if abs(p.A) == abs(p.B):
        if p.A != p.B and p.A != -p.B:  # pragma: no cover - unreachable for reals
            raise DegenerateParams("|A| == |B| but A is neither B nor -B")
        return _closed_equal(p)
    return _closed_unequal(p)


def _quad_complex(f, lo: float, hi: float, points=None, epsabs=1e-14,
                  epsrel=1e-13) -> complex:
    opts = dict(epsabs=epsabs, epsrel=epsrel, limit=1000)
    if points is not None:
        pts = sorted(p for p in points if lo < p < hi)
        opts["points"] = pts or None
    re = integrate.quad(lambda x: float(np.real(f(x))), lo, hi, **opts)[0]
    im = integrate.quad(lambda x: float(np.imag(f(x))), lo, hi, **opts)[0]
    return complex(re, im)


def gauss_hermite_integrand(p: GaussHermiteParams):
    """The integrand of ``J`` as a callable of ``x``."""
    def f(x):
        ax = p.A * x
        bx = p.B * x - p.d
        return (hermite_poly(p.n, ax) * hermite_poly(p.m, bx)
                * np.exp(-ax * ax / 2 + p.gamma * ax + p.delta * bx - bx * bx / 2))
    return f


def _support(center: float, width: float, degree: int) -> tuple[float, float]:
    half = width * (14.0 + 2.5 * math.sqrt(degree + 1))
    return center - half, center + half


def gauss_hermite_quad(p: GaussHermiteParams) -> complex:
    """Adaptive Gauss-Kronrod quadrature of ``J`` (independent oracle)."""
    S = p.A ** 2 + p.B ** 2
    lin = p.A * p.gamma + p.B * (p.delta + p.d)
    center = float(np.real(lin)) / S
    lo, hi = _support(center, 1 / math.sqrt(S), p.n + p.m)
    return _quad_complex(gauss_hermite_integrand(p), lo, hi, points=[center])


def gauss_hermite_abs_integral(p: GaussHermiteParams) -> float:
    """``∫|integrand|``: the scale against which the closed form is conditioned."""
    S = p.A ** 2 + p.B ** 2
    center = float(np.real(p.A * p.gamma + p.B * (p.delta + p.d))) / S
    lo, hi = _support(center, 1 / math.sqrt(S), p.n + p.m)
    f = gauss_hermite_integrand(p)
    return integrate.quad(lambda x: float(abs(f(x))), lo, hi, limit=1000,
                          epsrel=1e-8)[0]


@dataclass(frozen=True)
class OverlapKey:
    r: float
    rbar: float
    alpha: float
    beta_shift: float
    n: int
    m: int


def _overlap_params(n: int, m: int, r: float, rbar: float, alpha, beta):
    A = math.exp(r)
    B = math.exp(rbar)
    # substitute x -> x + sqrt(2) alpha / A to remove the shift from H_n
    d = SQRT2 * beta - B * SQRT2 * alpha / A
    return GaussHermiteParams(A=A, B=B, d=d, n=n, m=m)


def _overlap_log_norm(n: int, m: int, r: float, rbar: float) -> float:
    return (0.5 * (r + rbar) - 0.5 * (n + m) * math.log(2.0)
            - 0.5 * (math.lgamma(n + 1) + math.lgamma(m + 1)) - 0.5 * math.log(math.pi))


def overlap_closed(n: int, m: int, r: float, rbar: float, alpha: complex,
                   beta: complex) -> complex:
    """``∫ phi_n(x; r, alpha) phi_m(x; rbar, beta) dx`` by the closed forms.

    Shifts may be complex, in which case the wavefunctions are analytically
    continued (no conjugation).
    """
    p = _overlap_params(n, m, r, rbar, alpha, beta)
    if max(n, m) > LITERAL_DEGREE:
        return complex(math.exp(0.5 * (r + rbar)) / math.sqrt(math.pi) * _closed_scaled_sum(p))
    return complex(math.exp(_overlap_log_norm(n, m, r, rbar)) * gauss_hermite_closed(p))


def overlap_I(key: OverlapKey) -> complex:
    """``I_nm(r, rbar, alpha, beta)``; reduces to the equal-squeeze overlap when ``r == rbar``."""
    return overlap_closed(key.n, key.m, key.r, key.rbar, key.alpha, key.beta_shift)


def overlap_I_quad(key: OverlapKey) -> complex:
    """Quadrature oracle for :func:`overlap_I`, integrating the wavefunctions directly."""
    A, B = math.exp(key.r), math.exp(key.rbar)
    c1 = SQRT2 * key.alpha / A
    c2 = SQRT2 * key.beta_shift / B
    w1 = (14.0 + 2.5 * math.sqrt(key.n + 1)) / A
    w2 = (14.0 + 2.5 * math.sqrt(key.m + 1)) / B
    # the product is negligible outside the intersection of both supports
    lo = max(c1 - w1, c2 - w2)
    hi = min(c1 + w1, c2 + w2)
    if lo >= hi:
        lo, hi = min(c1 - w1, c2 - w2), max(c1 + w1, c2 + w2)

    def f(x):
        return phi_n(key.n, x, key.r, key.alpha) * np.conj(phi_n(key.m, x, key.rbar, key.beta_shift))
    return _quad_complex(f, lo, hi, points=[c1, c2])


def coherent_overlap(n: int, r: float, alpha: float, beta: complex) -> complex:
    """``<beta| S[r] D[alpha] |n>`` for real ``r, alpha`` and complex ``beta``.

    Uses ``<beta|x> = phi_0(x - sqrt(2) beta*) exp((beta*^2 - |beta|^2)/2)`` and
    the analytically continued closed form.
    """
    bc = np.conj(beta)
    phase = np.exp((bc * bc - abs(beta) ** 2) / 2)
    return complex(overlap_closed(n, 0, r, 0.0, alpha, bc) * phase)


def psi_sq_disp(x, r: float, alpha: complex):
    """Position wavefunction of ``S[r] D[alpha] |0>`` in the closed form

        psi(x) = (pi e^{-2r})^{-1/4} exp(-(x e^r - sqrt(2) alpha)^2/2 - Im(alpha)^2)
                 exp(-i Re(alpha) Im(alpha)).

    Note this differs from ``<x|S[r]D[alpha]|0>`` by the constant phase
    ``exp(-2i Re(alpha) Im(alpha))``; it is consistent with :func:`c0_closed`.
    """
    x = np.asarray(x, dtype=float)
    a_re, a_im = float(np.real(alpha)), float(np.imag(alpha))
    u = x * math.exp(r) - SQRT2 * complex(alpha)
    val = ((math.pi * math.exp(-2 * r)) ** -0.25
           * np.exp(-u * u / 2 - a_im ** 2) * np.exp(-1j * a_re * a_im))
    return val if np.ndim(val) else val[()]


def c0_closed(r: float, alpha: complex) -> complex:
    """Vacuum weight paired with :func:`psi_sq_disp`."""
    alpha = complex(alpha)
    return complex(np.exp(-alpha ** 2 / (math.exp(2 * r) + 1)
                          - 1j * np.conj(alpha) * alpha.imag) / math.sqrt(math.cosh(r)))
