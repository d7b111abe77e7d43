"""Small-shift sensitivity, the two-level readout protocol, and damping estimation.

For a shift ``delta = eps e^{i theta}`` the overlap ``O(eps) = |<psi|D[delta]|psi>|^2``
decays as ``1 - c eps^2``.  With ``G = i(e^{i theta} a^dag - e^{-i theta} a)`` the
displacement is ``exp(-i eps G)``, so ``c = Var(G)``.  Coherent states give
``c = 1`` and number states ``c = 2n + 1``; the estimator variance for
``s = eps^2`` after ``R`` repetitions is ``1/(R c)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize, stats

from . import fock
from .errors import OutsideMonotoneWindow, ZeroEnergyProbe
from .fock import FockVector, TruncationPolicy
from .phasespace import OverlapProfile, displaced_overlap, first_zero
from .states import StateSpec, build_state


@dataclass(frozen=True)
class SensitivityReport:
    theta: float
    c: float
    variance: float
    mean_n: float
    var_n: float
    R: int


@dataclass(frozen=True)
class DampingEstimate:
    kappa: float
    t: float
    eta: float
    delta_kappa: float
    mean_n: float
    var_n: float


@dataclass(frozen=True)
class ProtocolEstimate:
    s_hat: float
    m: int
    R: int
    p_e: float
    s_true: float
    seed: int


def _padded(psi: FockVector, extra: int = 3) -> np.ndarray:
    return psi.resized(psi.dim + extra).amps


def overlap_curvature(psi: FockVector, theta: float = 0.0) -> float:
    """``c(theta) = -(1/2) d^2 O / d eps^2`` at ``eps = 0``, as the variance of the generator."""
    v = _padded(psi)
    dim = v.size
    a = fock.annihilation(dim)
    G = 1j * (np.exp(1j * theta) * a.conj().T - np.exp(-1j * theta) * a)
    Gv = G @ v
    mean = np.vdot(v, Gv).real
    return float(np.vdot(Gv, Gv).real - mean ** 2)


def curvature_finite_difference(psi: FockVector, theta: float = 0.0,
                                h: float = 1e-3) -> float:
    """Central-difference estimate of ``c(theta)`` with one Richardson step.

    Uses ``O(eps) = O(-eps)`` for pure states only through the symmetric
    stencil; the displaced overlaps come from explicit matrix exponentials.
    """
    direction = np.exp(1j * theta)

    def second(step):
        o_p = displaced_overlap(psi, step * direction)
        o_m = displaced_overlap(psi, -step * direction)
        return (o_p - 2.0 + o_m) / step ** 2

    d2 = (4 * second(h / 2) - second(h)) / 3
    return float(-0.5 * d2)


def variance_report(spec: StateSpec | FockVector, theta: float = 0.0, R: int = 1,
                    policy: TruncationPolicy | None = None) -> SensitivityReport:
    if R < 1:
        raise ValueError("R must be >= 1")
    psi = spec if isinstance(spec, FockVector) else build_state(spec, policy)
    c = overlap_curvature(psi, theta)
    mean_n, var_n = fock.number_moments(psi)
    return SensitivityReport(theta=float(theta), c=c, variance=1.0 / (R * c),
                             mean_n=mean_n, var_n=var_n, R=int(R))


RATIO_COLUMNS = ("beta", "variance_ratio", "mean_n_ratio")


@dataclass(frozen=True)
class RatioTable:
    rows: list  # (beta, variance ratio, mean-n ratio)
    variance_crossings: list
    mean_n_crossings: list


def _crossings(xs, ys) -> list[float]:
    out = []
    for i in range(len(xs) - 1):
        a, b = ys[i] - 1.0, ys[i + 1] - 1.0
        if a == 0:
            out.append(float(xs[i]))
        elif a * b < 0:
            out.append(float(xs[i] - a * (xs[i + 1] - xs[i]) / (b - a)))
    return out


def ratio_curves(spec: StateSpec, ks_family, betas, theta: float = 0.0,
                 policy: TruncationPolicy | None = None) -> RatioTable:
    """Variance and mean-photon ratios of ``spec`` against a compass family.

    ``ks_family`` maps ``beta`` to a :class:`StateSpec`.  Crossings of either
    ratio with 1 are located by linear interpolation between sweep points.
    """
    betas = list(betas)
    if not betas:
        raise ValueError("beta sweep is empty")
    probe = variance_report(spec, theta, 1, policy)
    rows = []
    for b in betas:
        ks = variance_report(ks_family(b), theta, 1, policy)
        rows.append((float(b), probe.variance / ks.variance, probe.mean_n / ks.mean_n))
    xs = [r[0] for r in rows]
    return RatioTable(rows, _crossings(xs, [r[1] for r in rows]),
                      _crossings(xs, [r[2] for r in rows]))


def invert_overlap(profile: OverlapProfile, p: float, s_max: float,
                   tol: float = 1e-10) -> float:
    """Solve ``O(sqrt(s) e^{i theta}) = p`` for ``s`` on the monotone window ``[0, s_max]``.

    Counts outside the window's range clamp to its ends.
    """
    if p >= 1.0:
        return 0.0
    f = lambda s: float(profile(math.sqrt(max(s, 0.0))))  # noqa: E731
    if p <= f(s_max):
        return s_max
    return float(optimize.brentq(lambda s: f(s) - p, 0.0, s_max, xtol=tol * 1e-4, rtol=1e-14))


class TLSProtocol:
    """Readout model for a fixed probe and shift.

    Holds the overlap profile along the shift direction and the monotone
    window below its first zero, so repeated trials only draw the binomial
    count and invert it.
    """

    SCAN = 6.0

    def __init__(self, psi: FockVector, delta: complex):
        delta = complex(delta)
        self.psi = psi
        self.delta = delta
        self.theta = float(np.angle(delta)) if delta != 0 else 0.0
        zero = first_zero(psi, self.theta, eps_max=self.SCAN)
        # with no zero in range the overlap decays monotonically over the scan
        self.window = zero if zero is not None else self.SCAN
        if not 0 < abs(delta) < self.window:
            raise OutsideMonotoneWindow(
                f"|delta|={abs(delta):.4g} not inside (0, {self.window:.4g})")
        self.profile = OverlapProfile(psi, self.theta, self.window)
        self.s_max = self.window ** 2
        self.p_e = float(self.profile(abs(delta)))

    def run(self, R: int, seed: int) -> ProtocolEstimate:
        if R < 1:
            raise ValueError("R must be >= 1")
        rng = np.random.default_rng(seed)
        m = int(rng.binomial(R, self.p_e))
        s_hat = invert_overlap(self.profile, m / R, self.s_max)
        return ProtocolEstimate(s_hat=s_hat, m=m, R=int(R), p_e=self.p_e,
                                s_true=abs(self.delta) ** 2, seed=int(seed))

    def delta_method_variance(self, R: int) -> float:
        """``p(1-p) / (R (dO/ds)^2)``, the normal-approximation variance of ``s_hat``."""
        s = abs(self.delta) ** 2
        h = 1e-3 * s
        slope = (self.profile(math.sqrt(s + h)) - self.profile(math.sqrt(s - h))) / (2 * h)
        return float(self.p_e * (1 - self.p_e) / (R * slope ** 2))


def simulate_tls_protocol(spec: StateSpec | FockVector, delta: complex, R: int,
                          seed: int, policy: TruncationPolicy | None = None) -> ProtocolEstimate:
    """One run of the excited-state counting protocol.

    Draws ``m ~ Binomial(R, p_e)`` with ``p_e = O_delta`` and inverts
    ``O(s) = m/R`` for ``s = |delta|^2`` below the first zero of the overlap.
    """
    psi = spec if isinstance(spec, FockVector) else build_state(spec, policy)
    return TLSProtocol(psi, delta).run(R, seed)


def damping_error_from_moments(mean_n: float, var_n: float, kappa: float,
                               t: float) -> DampingEstimate:
    """Error-propagated uncertainty of the damping constant for a lossy channel.

    ``eta = exp(-2 kappa t)`` and
    ``dk = sqrt(var/(4 t^2 mean^2) + (1/eta - 1)/(4 t^2 mean))``.
    """
    if kappa < 0:
        raise ValueError("kappa must be non-negative")
    if t <= 0:
        raise ValueError("t must be positive")
    if mean_n <= 0:
        raise ZeroEnergyProbe("probe has zero mean photon number")
    eta = math.exp(-2 * kappa * t)
    var_n = max(var_n, 0.0)
    dk = math.sqrt(var_n / (4 * t * t * mean_n ** 2)
                   + (1 / eta - 1) / (4 * t * t * mean_n))
    return DampingEstimate(kappa=kappa, t=t, eta=eta, delta_kappa=dk,
                           mean_n=mean_n, var_n=var_n)


def damping_error(spec: StateSpec | FockVector, kappa: float, t: float,
                  policy: TruncationPolicy | None = None) -> DampingEstimate:
    psi = spec if isinstance(spec, FockVector) else build_state(spec, policy)
    mean_n, var_n = fock.number_moments(psi)
    if mean_n < 1e-14:
        raise ZeroEnergyProbe("probe has zero mean photon number")
    return damping_error_from_moments(mean_n, var_n, kappa, t)


FIG6_COLUMNS = ("beta", "state", "var_over_mean_sq", "inv_mean")


def fig6_curves(betas, policy: TruncationPolicy | None = None) -> list[tuple]:
    """Rows ``(beta, label, Var(N)/<N>^2, 1/<N>)`` for KS(l=0,-) and KS(l=1,+)."""
    rows = []
    for b in betas:
        if not b > 0:
            raise ValueError("beta must be positive")
        for label, (l, sign) in (("ks0-", (0, -1)), ("ks1+", (1, 1))):
            psi = build_state(StateSpec.compass(b, l, sign), policy)
            mean_n, var_n = fock.number_moments(psi)
            rows.append((float(b), label, var_n / mean_n ** 2, 1.0 / mean_n))
    return rows


def spearman(xs, ys) -> float:
    return float(stats.spearmanr(xs, ys).statistic)
