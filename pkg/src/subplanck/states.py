"""State families: squeezed/displaced number-state superpositions and compass states.

Every constructor works in a truncated Fock space whose size is chosen by a
:class:`~subplanck.fock.TruncationPolicy` and then verified against the tail
mass of the result.  The operator route (matrix exponentials) is the primary
construction; :func:`fock_amplitudes_analytic` provides the independent
integral route for the two superposed families.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy as np
from scipy import optimize

from . import fock
from .errors import InvalidState, TruncationOverflow
from .fock import FockVector, TruncationPolicy
from .hermite import coherent_overlap, overlap_closed

KINDS = ("ssdns", "ssns", "compass", "cat", "coherent", "fock", "sqdisp")
SUPPORT_THRESHOLD = 1e-10


@dataclass(frozen=True)
class StateSpec:
    """Tagged description of a constructible pure state.

    Only the fields relevant to ``kind`` are used:

    ``ssdns``    S[r](D[alpha] + D[-alpha])|n>, real r and alpha
    ``ssns``     (S[r] + S[-r])|n>, r > 0
    ``compass``  |beta> ± (-1)^-l |-beta> + i^-l |i beta> ± (-i)^-l |-i beta>
    ``cat``      |beta> ± |-beta>
    ``coherent`` |alpha>
    ``fock``     |n>
    ``sqdisp``   S[r] D[alpha] |n>, complex alpha
    """

    kind: str
    r: float = 0.0
    alpha: complex = 0.0
    n: int = 0
    beta: complex = 0.0
    l: int = 0
    sign: int = 1
    allow_any_label: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidState(f"unknown state kind {self.kind!r}")
        if self.n < 0 or int(self.n) != self.n:
            raise InvalidState("n must be a non-negative integer")
        if self.sign not in (1, -1):
            raise InvalidState("sign must be +1 or -1")
        for name in ("r", "alpha", "beta"):
            if not np.isfinite(getattr(self, name)):
                raise InvalidState(f"{name} must be finite")
        if self.kind == "ssns" and not self.r > 0:
            raise InvalidState("SSNS requires r > 0")
        if self.kind == "ssdns" and (np.imag(self.alpha) != 0):
            raise InvalidState("SSDNS displacement must be real")
        if self.kind == "compass" and not self.allow_any_label:
            allowed = range(4) if self.sign == 1 else range(2)
            if self.l not in allowed:
                raise InvalidState(
                    f"compass label l={self.l} invalid for sign {'+' if self.sign == 1 else '-'}")
        if self.kind in ("compass", "cat") and self.beta == 0:
            raise InvalidState("coherent amplitude beta must be nonzero")

    # convenience constructors
    @classmethod
    def ssdns(cls, r, alpha, n):
        return cls("ssdns", r=float(r), alpha=float(alpha), n=int(n))

    @classmethod
    def ssns(cls, r, n):
        return cls("ssns", r=float(r), n=int(n))

    @classmethod
    def compass(cls, beta, l, sign=1, allow_any_label=False):
        return cls("compass", beta=complex(beta), l=int(l), sign=_sign(sign),
                   allow_any_label=allow_any_label)

    @classmethod
    def cat(cls, beta, parity=1):
        return cls("cat", beta=complex(beta), sign=_sign(parity))

    @classmethod
    def coherent(cls, alpha):
        return cls("coherent", alpha=complex(alpha))

    @classmethod
    def fock(cls, n):
        return cls("fock", n=int(n))

    @classmethod
    def sqdisp(cls, r, alpha, n=0):
        return cls("sqdisp", r=float(r), alpha=complex(alpha), n=int(n))

    def params(self) -> dict:
        """JSON-friendly echo of the fields that define this state."""
        keep = {
            "ssdns": ("r", "alpha", "n"),
            "ssns": ("r", "n"),
            "compass": ("beta", "l", "sign"),
            "cat": ("beta", "sign"),
            "coherent": ("alpha",),
            "fock": ("n",),
            "sqdisp": ("r", "alpha", "n"),
        }[self.kind]
        out = {"kind": self.kind}
        for k, v in asdict(self).items():
            if k in keep:
                out[k] = _jsonable(v)
        return out


def _sign(s) -> int:
    if s in (1, "+", "plus", "even", True):
        return 1
    if s in (-1, "-", "minus", "odd", False):
        return -1
    raise InvalidState(f"sign must be + or -, got {s!r}")


def _jsonable(v):
    if isinstance(v, complex):
        return v.real if v.imag == 0 else [v.real, v.imag]
    return v


def _compass_terms(beta: complex, l: int, sign: int) -> list[tuple[complex, complex]]:
    # (weight, coherent amplitude) pairs of the four-component superposition
    return [
        (1.0, beta),
        (sign * (-1.0) ** (-l), -beta),
        (1j ** (-l), 1j * beta),
        (sign * (-1j) ** (-l), -1j * beta),
    ]


def _raw_operator_vector(spec: StateSpec, dim: int, guard: int) -> np.ndarray:
    D = lambda a: fock.displacement(a, dim, guard)  # noqa: E731
    S = lambda xi: fock.squeeze(xi, dim, guard)  # noqa: E731
    ket_n = np.zeros(dim, dtype=complex)
    ket_n[spec.n] = 1.0
    vac = np.zeros(dim, dtype=complex)
    vac[0] = 1.0
    k = spec.kind
    if k == "fock":
        return ket_n
    if k == "coherent":
        return D(spec.alpha) @ vac
    if k == "cat":
        return D(spec.beta) @ vac + spec.sign * (D(-spec.beta) @ vac)
    if k == "compass":
        return sum(w * (D(b) @ vac) for w, b in _compass_terms(spec.beta, spec.l, spec.sign))
    if k == "ssdns":
        return S(spec.r) @ (D(spec.alpha) @ ket_n + D(-spec.alpha) @ ket_n)
    if k == "ssns":
        return S(spec.r) @ ket_n + S(-spec.r) @ ket_n
    if k == "sqdisp":
        return S(spec.r) @ (D(spec.alpha) @ ket_n)
    raise InvalidState(k)  # pragma: no cover


def _initial_dim(spec: StateSpec, policy: TruncationPolicy) -> int:
    amp = abs(spec.alpha) if spec.kind != "compass" and spec.kind != "cat" else 0.0
    return max(policy.suggest_dim(spec.n, amp, spec.r, spec.beta), spec.n + 1 + policy.guard)


def build_state(spec: StateSpec, policy: TruncationPolicy | None = None,
                dim: int | None = None) -> FockVector:
    """Construct and normalize ``spec`` through the operator route.

    With ``dim`` given the cutoff is fixed and only checked; otherwise the
    cutoff starts from the policy estimate and grows until the mass in the
    guard band falls below ``policy.target_tail``.
    """
    policy = policy or TruncationPolicy()
    fixed = dim is not None
    dim = int(dim) if fixed else _initial_dim(spec, policy)
    if dim <= spec.n:
        raise TruncationOverflow(f"dim {dim} cannot hold |{spec.n}>")
    while True:
        if dim + policy.guard > policy.max_dim:
            raise TruncationOverflow(
                f"{spec.kind} needs more than {policy.max_dim} padded levels")
        vec = FockVector(_raw_operator_vector(spec, dim, policy.guard), policy.guard)
        if vec.norm == 0:
            raise InvalidState(f"{spec.kind} superposition vanishes identically")
        vec = vec.normalized()
        if vec.tail_mass <= policy.target_tail:
            return vec
        if fixed:
            raise TruncationOverflow(
                f"tail mass {vec.tail_mass:.3g} exceeds {policy.target_tail:g} at dim {dim}")
        dim = int(math.ceil(dim * 1.4))


def coherent_amplitudes(alpha: complex, dim: int) -> np.ndarray:
    """Poissonian series ``e^{-|alpha|^2/2} alpha^k / sqrt(k!)``."""
    alpha = complex(alpha)
    if alpha == 0:
        out = np.zeros(dim, dtype=complex)
        out[0] = 1.0
        return out
    k = np.arange(dim)
    log_mag = -abs(alpha) ** 2 / 2 + k * math.log(abs(alpha)) - 0.5 * _lgamma(k + 1)
    return np.exp(log_mag) * np.exp(1j * k * np.angle(alpha))


def _lgamma(x):
    return np.vectorize(math.lgamma)(x)


def compass_amplitudes(beta: complex, l: int, sign: int, dim: int) -> np.ndarray:
    """Normalized compass-state amplitudes from the number-basis formula.

    ``sign=+1`` keeps ``m ≡ l (mod 4)`` with weight ``beta^m/sqrt(m!)``;
    ``sign=-1`` keeps ``m = 2j + l + 1`` with weight ``(1 + (-1)^j i) beta^m/sqrt(m!)``.
    Any integer ``l`` is accepted; labels act modulo 4 through the phases.
    """
    beta = complex(beta)
    sign = _sign(sign)
    if beta == 0:
        raise InvalidState("beta must be nonzero")
    m = np.arange(dim)
    log_mag = m * math.log(abs(beta)) - 0.5 * _lgamma(m + 1)
    log_mag -= log_mag.max()
    base = np.exp(log_mag) * np.exp(1j * m * np.angle(beta))
    if sign == 1:
        weight = ((m - l) % 4 == 0).astype(complex)
    else:
        k = m - l - 1
        odd_ok = (k % 2 == 0)
        j = np.floor_divide(k, 2)
        weight = np.where(odd_ok, 1 + (-1.0) ** j * 1j, 0)
    f = weight * base
    nrm = np.linalg.norm(f)
    if nrm == 0:
        raise InvalidState(f"no support below dim {dim} for l={l}")
    return f / nrm


def fock_amplitudes_analytic(spec: StateSpec, dim: int) -> np.ndarray:
    """Amplitudes ``<k|psi>`` for SSDNS/SSNS from the closed-form overlaps.

    ``c_k = N1 (I_nk(r,0,alpha,0) + I_nk(r,0,-alpha,0))`` and
    ``b_k = N2 (I_nk(r,0,0,0) + I_nk(-r,0,0,0))``.  The normalizations use the
    same overlap integrals (see :func:`closed_form_norm`).
    """
    n, r = spec.n, spec.r
    if spec.kind == "ssdns":
        a = float(np.real(spec.alpha))
        raw = np.array([overlap_closed(n, k, r, 0.0, a, 0.0)
                        + overlap_closed(n, k, r, 0.0, -a, 0.0) for k in range(dim)])
    elif spec.kind == "ssns":
        raw = np.array([overlap_closed(n, k, r, 0.0, 0.0, 0.0)
                        + overlap_closed(n, k, -r, 0.0, 0.0, 0.0) for k in range(dim)])
    else:
        raise InvalidState("analytic amplitudes exist for ssdns and ssns only")
    return closed_form_norm(spec) * raw


def closed_form_norm(spec: StateSpec) -> float:
    """Normalization ``N1`` or ``N2`` from the four overlap terms.

    For SSNS the cross terms are ``I_nn(r,-r,0,0) + I_nn(-r,r,0,0)``.
    """
    n, r = spec.n, spec.r
    if spec.kind == "ssdns":
        a = float(np.real(spec.alpha))
        total = sum(overlap_closed(n, n, r, r, s1 * a, s2 * a)
                    for s1 in (1, -1) for s2 in (1, -1))
    elif spec.kind == "ssns":
        total = (overlap_closed(n, n, r, -r, 0.0, 0.0) + overlap_closed(n, n, -r, r, 0.0, 0.0)
                 + overlap_closed(n, n, r, r, 0.0, 0.0) + overlap_closed(n, n, -r, -r, 0.0, 0.0))
    else:
        raise InvalidState("closed-form norm exists for ssdns and ssns only")
    return 1.0 / math.sqrt(float(np.real(total)))


def fidelity_states(a: FockVector, b: FockVector) -> float:
    return abs(a.inner(b)) ** 2


def fidelity(a: StateSpec, b: StateSpec, policy: TruncationPolicy | None = None) -> float:
    """``|<a|b>|^2`` with both states built at a common cutoff."""
    policy = policy or TruncationPolicy()
    va = build_state(a, policy)
    vb = build_state(b, policy)
    return min(fidelity_states(va, vb), 1.0 + 1e-12)


def fidelity_closed(probe: StateSpec, ks: StateSpec) -> float:
    """Fidelity of an SSDNS/SSNS probe with a compass state via coherent overlaps.

    ``F = N^2 |O(r, ±alpha) + O(±r, 0)|^2`` where ``O`` sums the four
    ``<beta_j|S[r]D[alpha]|n>`` overlaps with the conjugated compass weights
    and ``N3^2`` is the compass normalization.
    """
    if ks.kind != "compass":
        raise InvalidState("second argument must be a compass state")
    terms = _compass_terms(ks.beta, ks.l, ks.sign)
    n3_sq = 1.0 / _compass_norm_sq(terms)

    def big_o(r, alpha):
        return n3_sq ** 0.5 * sum(np.conj(w) * coherent_overlap(probe.n, r, alpha, b)
                                  for w, b in terms)

    if probe.kind == "ssdns":
        a = float(np.real(probe.alpha))
        amp = big_o(probe.r, a) + big_o(probe.r, -a)
    elif probe.kind == "ssns":
        amp = big_o(probe.r, 0.0) + big_o(-probe.r, 0.0)
    else:
        raise InvalidState("closed-form fidelity exists for ssdns and ssns only")
    return float(closed_form_norm(probe) ** 2 * abs(amp) ** 2)


def _compass_norm_sq(terms) -> float:
    # <sum w_i beta_i | sum w_j beta_j> with <a|b> = exp(-|a|^2/2 - |b|^2/2 + a* b)
    total = 0j
    for wi, bi in terms:
        for wj, bj in terms:
            total += np.conj(wi) * wj * np.exp(-abs(bi) ** 2 / 2 - abs(bj) ** 2 / 2
                                               + np.conj(bi) * bj)
    return float(np.real(total))


@dataclass(frozen=True)
class NumberDistribution:
    probs: np.ndarray
    support_step: int

    @property
    def support(self) -> np.ndarray:
        return np.flatnonzero(self.probs > SUPPORT_THRESHOLD)


def number_distribution(psi: FockVector, threshold: float = SUPPORT_THRESHOLD) -> NumberDistribution:
    """Photon-number probabilities and the spacing of their support.

    The step is the gcd of gaps between levels with probability above
    ``threshold``; a single supported level reports step 0.
    """
    probs = psi.probabilities.copy()
    probs.setflags(write=False)
    idx = np.flatnonzero(probs > threshold)
    step = int(np.gcd.reduce(np.diff(idx))) if idx.size > 1 else 0
    return NumberDistribution(probs, step)



@dataclass(frozen=True)
class TableRow:
    """One published fidelity entry and how it is evaluated.

    ``l_published`` is the label as printed; ``l_used`` is the label passed to
    the compass constructor.  ``gated`` rows carry an acceptance tolerance.
    """

    probe: StateSpec
    beta: complex
    l_published: int
    l_used: int
    sign: int
    published: float
    tolerance: float | None
    note: str = ""

    @property
    def compass(self) -> StateSpec:
        return StateSpec.compass(self.beta, self.l_used, self.sign, allow_any_label=True)


TABLE_I = (
    TableRow(StateSpec.ssns(0.2, 3), 1.41, 3, 3, 1, 0.9998, 5e-4),
    TableRow(StateSpec.ssns(0.3, 2), 1.41, 2, 2, 1, 0.9997, 5e-4),
    TableRow(StateSpec.ssns(0.3, 1), 1.01, 1, 1, 1, 0.9994, 5e-4),
    # |0> squeezed keeps even photon numbers only, so it is orthogonal to the
    # l=1 compass state (support 1 mod 4); the printed label must be l=0.
    TableRow(StateSpec.ssns(0.4, 0), 0.81, 1, 0, 1, 0.9998, 5e-4, "label_corrected"),
    TableRow(StateSpec.ssdns(0.15, 0.61, 1), 0.7 + 0.7j, 0, 0, -1, 0.9995, 1e-3),
    TableRow(StateSpec.ssdns(0.2, 0.7, 1), 0.85 + 0.85j, 0, 0, -1, 0.9960, 1e-3),
    # label outside {0, 1}; the phases (-1)^-l and (+-i)^-l are used as printed
    TableRow(StateSpec.ssdns(0.49, 0.5, 2), 0.9 + 0.9j, -1, -1, -1, 0.9634, None,
             "ambiguous_l"),
)


def fidelity_table(rows=TABLE_I, policy: TruncationPolicy | None = None) -> list[dict]:
    """Evaluate each row through the operator route and the coherent-overlap route."""
    out = []
    for row in rows:
        f_op = fidelity(row.probe, row.compass, policy)
        f_closed = fidelity_closed(row.probe, row.compass)
        p = row.probe
        out.append({
            "state": p.kind, "alpha": float(np.real(p.alpha)), "n": p.n, "r": p.r,
            "beta": _jsonable(complex(row.beta)), "l": row.l_published, "l_used": row.l_used,
            "sign": "+" if row.sign == 1 else "-", "fidelity": f_op,
            "fidelity_closed": f_closed, "published": row.published,
            "tolerance": row.tolerance, "note": row.note,
        })
    return out


def fit_compass_beta(probe: StateSpec, l: int, sign: int = 1, bounds=(0.2, 4.0),
                     policy: TruncationPolicy | None = None) -> tuple[float, float]:
    """Real ``beta`` maximizing the fidelity of ``probe`` with ``KS(beta, l, sign)``.

    Returns ``(beta, fidelity)``.  Used where a figure names the compass
    label but not its amplitude.
    """
    psi = build_state(probe, policy)

    def loss(b):
        ks = build_state(StateSpec.compass(b, l, sign, allow_any_label=True), policy)
        return -fidelity_states(psi, ks)

    res = optimize.minimize_scalar(loss, bounds=bounds, method="bounded",
                                   options={"xatol": 1e-8})
    return float(res.x), float(-res.fun)
