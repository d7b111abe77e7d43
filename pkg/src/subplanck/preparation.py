"""Qubit-oscillator models that generate the squeezed superpositions.

Composite vectors and matrices are ordered qubit-major with the qubit basis
``(e, g)``: the first ``dim`` entries belong to ``|e>``, the next ``dim`` to
``|g>``.  ``sigma_z = diag(1, -1)`` in that basis and ``|+-> = (|e> +- |g>)/sqrt(2)``.

H1 (two-photon driven Rabi model, in the drive's rotating frame)::

    Lambda a^dag a + g (a + a^dag) sigma_x + G (a^2 + a^dag^2) [+ omega_a sigma_z / 2]

For ``omega_a = 0`` each ``sigma_x = +-1`` branch is a displaced, squeezed
oscillator.  With ``eps = sqrt(Lambda^2 - 4 G^2)`` its eigenvectors are
``S[chi] D[-+lam] |k>`` with::

    chi = (1/4) ln((Lambda + 2G)/(Lambda - 2G))
    lam = g e^{chi} / (Lambda + 2G)
    E_k = eps (k + 1/2) - Lambda/2 - g^2/(Lambda + 2G)

H2 (qubit-conditioned two-photon interaction)::

    (g1 a^dag a + g2 (a^2 + a^dag^2)) sigma_z + omega a^dag a

is block diagonal in the qubit and conserves photon-number parity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from . import fock
from .errors import (InvalidState, TruncationOverflow, UnstableRegime,
                     ZeroProbabilityBranch)
from .fock import FockVector
from .states import StateSpec, build_state, fidelity_states

SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)


@dataclass(frozen=True)
class RabiParams:
    omega_o: float = 0.0
    omega_a: float = 0.0
    omega_t: float = 0.0
    g: float = 0.0
    G: float = 0.0
    g1: float = 0.0
    g2: float = 0.0
    omega: float = 0.0

    @property
    def Lambda(self) -> float:
        return self.omega_o - self.omega_t

    @classmethod
    def h1(cls, Lambda: float, G: float, g: float, omega_a: float = 0.0) -> "RabiParams":
        """Parameters with the detuning given directly (``omega_t = 0``)."""
        return cls(omega_o=Lambda, omega_a=omega_a, g=g, G=G)

    @classmethod
    def h2(cls, g1: float, g2: float, omega: float) -> "RabiParams":
        return cls(g1=g1, g2=g2, omega=omega)

    def require_h1(self):
        if not self.Lambda > 2 * abs(self.G):
            raise UnstableRegime(
                f"Lambda={self.Lambda:.6g} must exceed 2|G|={2 * abs(self.G):.6g}")

    def require_h2(self):
        if 2 * abs(self.g2) > self.omega:
            raise UnstableRegime(f"2|g2|={2 * abs(self.g2):.6g} exceeds omega={self.omega:.6g}")

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("omega_o", "omega_a", "omega_t", "g", "G", "g1", "g2", "omega")}


@dataclass(frozen=True, eq=False)
class QubitOscillatorState:
    """Joint state with amplitudes ``[e-block, g-block]``, each ``dim`` long."""

    amps: np.ndarray
    guard: int = fock.DEFAULT_GUARD

    def __post_init__(self):
        arr = np.array(self.amps, dtype=complex).reshape(-1)
        if arr.size < 2 or arr.size % 2:
            raise ValueError("joint amplitudes need an even, nonzero length")
        arr.setflags(write=False)
        object.__setattr__(self, "amps", arr)

    @classmethod
    def product(cls, psi: FockVector, qubit) -> "QubitOscillatorState":
        q = np.asarray(qubit, dtype=complex).reshape(2)
        return cls(np.kron(q, psi.amps), psi.guard)

    @property
    def dim(self) -> int:
        return self.amps.size // 2

    @property
    def excited(self) -> np.ndarray:
        return self.amps[:self.dim]

    @property
    def ground(self) -> np.ndarray:
        return self.amps[self.dim:]

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    def sector_populations(self) -> dict:
        """Population per (qubit, photon parity) sector."""
        out = {}
        for q, block in (("e", self.excited), ("g", self.ground)):
            p = np.abs(block) ** 2
            out[(q, 0)] = float(p[0::2].sum())
            out[(q, 1)] = float(p[1::2].sum())
        return out


PLUS = np.array([1.0, 1.0]) / math.sqrt(2)
MINUS = np.array([1.0, -1.0]) / math.sqrt(2)


# ---------------------------------------------------------------- H1

def h1_branch(p: RabiParams, dim: int, branch: int) -> np.ndarray:
    """Oscillator Hamiltonian on the ``sigma_x = branch`` subspace (``omega_a = 0``)."""
    if branch not in (1, -1):
        raise ValueError("branch must be +1 or -1")
    a = fock.annihilation(dim)
    ad = a.conj().T
    return p.Lambda * (ad @ a) + branch * p.g * (a + ad) + p.G * (a @ a + ad @ ad)


def build_h1_effective(p: RabiParams, dim: int, include_qubit: bool = False) -> np.ndarray:
    """``Lambda a^dag a + g (a + a^dag) sigma_x + G (a^2 + a^dag^2)`` on qubit x oscillator.

    ``include_qubit`` adds ``omega_a sigma_z / 2``.
    """
    p.require_h1()
    a = fock.annihilation(dim)
    ad = a.conj().T
    eye_q = np.eye(2)
    osc = p.Lambda * (ad @ a) + p.G * (a @ a + ad @ ad)
    H = np.kron(eye_q, osc) + p.g * np.kron(SIGMA_X, a + ad)
    if include_qubit:
        H = H + 0.5 * p.omega_a * np.kron(SIGMA_Z, np.eye(dim))
    return H


@dataclass(frozen=True)
class H1Transform:
    chi: float
    lam: float
    eps: float
    shift: float  # constant energy offset, E_k = eps (k + 1/2) + shift

    def energy(self, k) -> np.ndarray:
        return self.eps * (np.asarray(k) + 0.5) + self.shift


def h1_transform(p: RabiParams) -> H1Transform:
    p.require_h1()
    L, G = p.Lambda, p.G
    chi = 0.25 * math.log((L + 2 * G) / (L - 2 * G))
    eps = math.sqrt(L * L - 4 * G * G)
    lam = p.g * math.exp(chi) / (L + 2 * G)
    return H1Transform(chi=chi, lam=lam, eps=eps, shift=-L / 2 - p.g ** 2 / (L + 2 * G))


def h1_published_constants(p: RabiParams) -> dict:
    """The published expressions for ``chi``, ``lambda`` and the ground energy, verbatim."""
    p.require_h1()
    L, G, g = p.Lambda, p.G, p.g
    eps = math.sqrt(L * L - 4 * G * G)
    return {
        "chi": -0.5 * math.log((L + 2 * G) / (L - 2 * G)),
        "lam": g * (L - 2 * G) / (eps * (L + 2 * G)),
        "ground": 0.5 * (eps - 1) - 2 * g * g / eps * ((L - 2 * G) / (L + 2 * G)) ** 2,
    }


def _branch_unitary(tr: H1Transform, branch: int, dim: int, guard: int) -> np.ndarray:
    return fock.squeeze(tr.chi, dim, guard) @ fock.displacement(-branch * tr.lam, dim, guard)


@dataclass(frozen=True)
class H1Check:
    dim: int
    inner: int
    residual: float           # max off-diagonal |U^dag H U| on the inner block, both branches
    diagonal_error: float     # max |diag - E_k| on the inner block
    branch_fidelity: dict     # {(branch, k): |<dense_k|S D|k>|^2}
    joint_fidelity: dict      # {(k, sign): <v|P_k|v>} for S[D(lam) +- D(-lam)]|k, +->
    transform: H1Transform


def h1_diagonalization_check(p: RabiParams, dim: int = 80, guard: int = fock.DEFAULT_GUARD,
                             inner: int = 10, n_max: int = 3) -> H1Check:
    """Conjugate each ``sigma_x`` branch by ``S[chi] D[-+lam]`` and compare with dense eigensystems.

    The residual is read off the lowest ``inner`` levels, away from the
    truncation edge.  Eigenvector fidelities use a dense eigensolver on each
    branch and, for the joint qubit form, the projector onto the doubly
    degenerate level ``E_k``.
    """
    p.require_h1()
    if p.omega_a != 0:
        raise InvalidState("the displaced-squeezed diagonalization needs omega_a = 0")
    if not 0 < inner <= dim or n_max >= inner:
        raise ValueError("need n_max < inner <= dim")
    tr = h1_transform(p)
    residual = 0.0
    diag_err = 0.0
    branch_fid = {}
    kets = {}
    for branch in (1, -1):
        H = h1_branch(p, dim, branch)
        U = _branch_unitary(tr, branch, dim, guard)
        M = (U.conj().T @ H @ U)[:inner, :inner]
        off = M - np.diag(np.diag(M))
        residual = max(residual, float(np.max(np.abs(off))))
        diag_err = max(diag_err, float(np.max(np.abs(np.diag(M) - tr.energy(np.arange(inner))))))
        _, vecs = np.linalg.eigh(H)
        for k in range(n_max + 1):
            ket = U[:, k]
            kets[(branch, k)] = ket
            branch_fid[(branch, k)] = float(abs(np.vdot(vecs[:, k], ket)) ** 2
                                            / np.vdot(ket, ket).real)
    H = build_h1_effective(p, dim)
    evals, evecs = np.linalg.eigh(H)
    joint = {}
    for k in range(n_max + 1):
        # S[D(-lam) + s D(lam)]|k> on |+> and S[D(-lam) - s D(lam)]|k> on |->
        # regroups the two sigma_x branches onto sigma_z components.
        plus, minus = kets[(1, k)], kets[(-1, k)]
        for s in (1, -1):
            v = np.concatenate([plus + s * minus, plus - s * minus])
            v = v / np.linalg.norm(v)
            cols = evecs[:, np.abs(evals - tr.energy(k)) < 1e-6 * max(1.0, tr.eps)]
            joint[(k, s)] = float(np.sum(np.abs(cols.conj().T @ v) ** 2))
    return H1Check(dim=dim, inner=inner, residual=residual, diagonal_error=diag_err,
                   branch_fidelity=branch_fid, joint_fidelity=joint, transform=tr)


# ---------------------------------------------------------------- H2

def _h2_blocks(p: RabiParams, dim: int) -> tuple[np.ndarray, np.ndarray]:
    a = fock.annihilation(dim)
    ad = a.conj().T
    n = ad @ a
    two = a @ a + ad @ ad
    return (p.omega + p.g1) * n + p.g2 * two, (p.omega - p.g1) * n - p.g2 * two


def build_h2(p: RabiParams, dim: int) -> np.ndarray:
    """``(g1 a^dag a + g2 (a^2 + a^dag^2)) sigma_z + omega a^dag a`` on qubit x oscillator."""
    p.require_h2()
    a = fock.annihilation(dim)
    ad = a.conj().T
    inter = p.g1 * (ad @ a) + p.g2 * (a @ a + ad @ ad)
    return np.kron(SIGMA_Z, inter) + p.omega * np.kron(np.eye(2), ad @ a)


def _block_propagator(H: np.ndarray, t: float) -> np.ndarray:
    w, v = np.linalg.eigh(H)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def _initial(n: int, dim: int, guard: int) -> QubitOscillatorState:
    return QubitOscillatorState.product(fock.basis(n, dim, guard), PLUS)


def evolve_h2(p: RabiParams, n: int, t: float, dim: int = 80,
              guard: int = fock.DEFAULT_GUARD, tail_tol: float = 1e-12) -> QubitOscillatorState:
    """``exp(-i H2 t)|n, +>`` from the exact propagator of each qubit block.

    Raises :class:`TruncationOverflow` when the evolved oscillator reaches the
    top ``guard`` levels with more than ``tail_tol`` probability.
    """
    p.require_h2()
    if not 0 <= n < dim - guard:
        raise ValueError("initial level must lie below the guard band")
    He, Hg = _h2_blocks(p, dim)
    psi0 = _initial(n, dim, guard)
    e = _block_propagator(He, t) @ psi0.excited
    g = _block_propagator(Hg, t) @ psi0.ground
    out = QubitOscillatorState(np.concatenate([e, g]), guard)
    tail = sum(float(np.sum(np.abs(b[dim - guard:]) ** 2)) for b in (e, g))
    if tail > tail_tol:
        raise TruncationOverflow(f"evolved state puts {tail:.3g} in the guard band at dim={dim}")
    return out


def evolve_h2_stepped(p: RabiParams, n: int, t: float, dim: int = 80,
                      guard: int = fock.DEFAULT_GUARD, tol: float = 1e-10,
                      max_halvings: int = 12) -> tuple[QubitOscillatorState, int]:
    """Product of short-step exponentials of the full matrix, halving the step until converged.

    Returns the state and the number of steps used.
    """
    from scipy.linalg import expm

    H = build_h2(p, dim)
    v0 = _initial(n, dim, guard).amps
    prev = None
    steps = 1
    for _ in range(max_halvings + 1):
        U = expm(-1j * H * (t / steps))
        v = v0.copy()
        for _ in range(steps):
            v = U @ v
        if prev is not None and np.linalg.norm(v - prev) < tol:
            return QubitOscillatorState(v, guard), steps
        prev = v
        steps *= 2
    raise TruncationOverflow("step halving did not converge")


def published_r(p: RabiParams, t: float) -> float:
    """Published squeeze parameter ``(1/2) ln((w - 2 g2 j0(g1 t))/(w + 2 g2 j0(g1 t)))``."""
    p.require_h2()
    j0 = float(np.sinc(p.g1 * t / math.pi))
    return 0.5 * math.log((p.omega - 2 * p.g2 * j0) / (p.omega + 2 * p.g2 * j0))


def published_closed_form_h2(p: RabiParams, n: int, t: float, dim: int = 80,
                         guard: int = fock.DEFAULT_GUARD) -> QubitOscillatorState:
    """The published closed-form evolved state, read literally and normalized.

    ``N[S(-r e^{-i g1 t}) S(r e^{-i lam+ t}) e^{-i g1 t n}|n, e>
    + S(r e^{i g1 t}) S(-r e^{-i lam- t}) e^{i g1 t n}|n, g>]``.
    """
    r = published_r(p, t)
    j0 = float(np.sinc(p.g1 * t / math.pi))
    root = 2 * math.sqrt(p.omega ** 2 - 4 * p.g2 ** 2 * j0 ** 2)
    lam_p, lam_m = p.g1 + root, -p.g1 + root
    k = fock.basis(n, dim, guard).amps
    e = (fock.squeeze(-r * np.exp(-1j * p.g1 * t), dim, guard)
         @ fock.squeeze(r * np.exp(-1j * lam_p * t), dim, guard) @ k) * np.exp(-1j * p.g1 * t * n)
    g = (fock.squeeze(r * np.exp(1j * p.g1 * t), dim, guard)
         @ fock.squeeze(-r * np.exp(-1j * lam_m * t), dim, guard) @ k) * np.exp(1j * p.g1 * t * n)
    v = np.concatenate([e, g])
    return QubitOscillatorState(v / np.linalg.norm(v), guard)


def state_overlap(a: QubitOscillatorState, b: QubitOscillatorState) -> float:
    if a.dim != b.dim:
        raise ValueError("dimension mismatch")
    return float(abs(np.vdot(a.amps, b.amps)) ** 2 / (a.norm ** 2 * b.norm ** 2))


def project_qubit(state: QubitOscillatorState, basis: int | str = "+",
                  min_probability: float = 1e-14) -> tuple[FockVector, float]:
    """Measure the qubit in ``|+->``; returns the renormalized oscillator state and its probability."""
    sign = {"+": 1, "-": -1, 1: 1, -1: -1}.get(basis)
    if sign is None:
        raise ValueError("basis must be '+' or '-'")
    osc = (state.excited + sign * state.ground) / math.sqrt(2)
    prob = float(np.vdot(osc, osc).real) / state.norm ** 2
    if prob < min_probability:
        raise ZeroProbabilityBranch(f"branch {basis} has probability {prob:.3g}")
    return FockVector(osc / np.linalg.norm(osc), state.guard), prob


@dataclass(frozen=True)
class ScanRow:
    t: float
    probability: float
    r_published: float
    fidelity_published_r: float
    r_best: float
    fidelity_best: float
    closed_form_overlap: float


def _ssns_fidelity(psi: FockVector, r: float, n: int) -> float:
    if abs(r) < 1e-12:
        target = fock.basis(n, psi.dim, psi.guard)
    else:
        target = build_state(StateSpec.ssns(abs(r), n))
    return fidelity_states(psi, target)


def ssns_scan(p: RabiParams, n: int, times, dim: int = 80,
              guard: int = fock.DEFAULT_GUARD, r_max: float = 1.5) -> list[ScanRow]:
    """Fidelity of the ``+`` branch of the evolved state with SSNS over a time window.

    Each row reports the fidelity at the published ``r(t)`` and at the best
    real squeeze found by bounded minimization, plus the overlap between the
    numerical and published closed-form joint states.
    """
    rows = []
    for t in times:
        t = float(t)
        state = evolve_h2(p, n, t, dim, guard)
        psi, prob = project_qubit(state, "+")
        rp = published_r(p, t)
        res = optimize.minimize_scalar(lambda r: -_ssns_fidelity(psi, r, n),
                                       bounds=(1e-6, r_max), method="bounded",
                                       options={"xatol": 1e-8})
        closed = published_closed_form_h2(p, n, t, dim, guard)
        rows.append(ScanRow(t=t, probability=prob, r_published=rp,
                            fidelity_published_r=_ssns_fidelity(psi, rp, n),
                            r_best=float(res.x), fidelity_best=float(-res.fun),
                            closed_form_overlap=state_overlap(state, closed)))
    return rows
