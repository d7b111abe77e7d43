"""Acceptance criteria, one test per criterion.

Each test prints a single ``PASS``/``FAIL`` line with the measured numbers
before asserting, so ``pytest tests/test_acceptance.py`` (or running this
file directly) yields a readable report.
"""

import math
import sys
import time

import numpy as np
import pytest

from subplanck import fock
from subplanck.hermite import OverlapKey, overlap_I, overlap_I_quad
from subplanck.metrology import (TLSProtocol, curvature_finite_difference, damping_error, fig6_curves,
                                 overlap_curvature, ratio_curves, spearman, variance_report)
from subplanck.phasespace import (PhaseSpaceGrid, displaced_overlap, marginal_x, overlap_via_wigner,
                                  purity, wavefunction, wigner, wigner_by_integral, wigner_points)
from subplanck.preparation import (PLUS, QubitOscillatorState, RabiParams, evolve_h2,
                                   h1_diagonalization_check, ssns_scan)
from subplanck.states import (TABLE_I, StateSpec, build_state, fidelity_table,
                              fock_amplitudes_analytic)


@pytest.fixture
def report(capsys):
    def _report(number, title, ok, detail):
        with capsys.disabled():
            print(f"\n[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} | {detail}")
        assert ok, detail
    return _report


def test_criterion_1_table_fidelities(report):
    start = time.perf_counter()
    rows = fidelity_table()
    elapsed = time.perf_counter() - start
    gated = [r for r in rows if r["tolerance"] is not None]
    devs = [abs(r["fidelity"] - r["published"]) for r in gated]
    ok = all(d <= r["tolerance"] for d, r in zip(devs, gated)) and elapsed < 10
    row7 = rows[6]
    report(1, "Table I reproduction", ok,
           "computed " + ", ".join(f"{r['fidelity']:.5f}" for r in rows)
           + f"; max gated deviation {max(devs):.2e}; row 7 (l=-1, ungated) {row7['fidelity']:.5f}"
           f" vs {row7['published']}; {elapsed:.2f}s")


def _random_keys(count, seed=2024):
    rng = np.random.default_rng(seed)
    keys = []
    for i in range(count):
        r, rbar = rng.uniform(-1, 1, 2)
        if i % 4 == 0:
            rbar = r  # equal squeezing exercises the A = B form
        a, b = rng.uniform(-3, 3, 2)
        n, m = rng.integers(0, 11, 2)
        keys.append(OverlapKey(float(r), float(rbar), float(a), float(b), int(n), int(m)))
    return keys


def test_criterion_2_integral_oracle(report):
    start = time.perf_counter()
    keys = _random_keys(600)
    worst = max(abs(overlap_I(k) - overlap_I_quad(k)) for k in keys)
    elapsed = time.perf_counter() - start
    report(2, "closed-form overlaps vs adaptive quadrature", worst < 1e-8 and elapsed < 60,
           f"{len(keys)} sets, max |diff| {worst:.2e}; {elapsed:.1f}s")


ROUTE_ZOO = ([StateSpec.ssdns(0.3, 1.8, 1), StateSpec.ssns(0.3, 2), StateSpec.ssdns(0.45, 2.0, 1)]
             + [StateSpec.ssns(0.45, n) for n in range(1, 5)]
             + [row.probe for row in TABLE_I])


def test_criterion_3_route_equivalence(report):
    worst = 0.0
    for spec in ROUTE_ZOO:
        psi = build_state(spec)
        worst = max(worst, float(np.max(np.abs(fock_amplitudes_analytic(spec, psi.dim) - psi.amps))))
    report(3, "analytic vs operator Fock amplitudes", worst < 1e-8,
           f"{len(ROUTE_ZOO)} states, max |diff| {worst:.2e}")


WIGNER_ZOO = [StateSpec.ssdns(0.45, 2.0, 1), StateSpec.ssns(0.45, 1), StateSpec.ssns(0.45, 4),
              StateSpec.compass(1.41, 2, +1), StateSpec.fock(1)]
SPOTS = [(0.0, 0.0), (0.3, -1.1), (-1.7, 0.4), (2.2, 2.0), (1.0, -3.0)]


def _mass_outside(psi, half_width):
    """Probability beyond ``|x| > half_width`` plus beyond ``|p| > half_width``."""
    x = np.linspace(-half_width, half_width, 4001)
    rotated = psi.amps * (-1j) ** np.arange(psi.dim)  # quarter turn maps p onto x
    inside_x = np.trapezoid(np.abs(wavefunction(psi, x)) ** 2, x)
    inside_p = np.trapezoid(np.abs(wavefunction(type(psi)(rotated), x)) ** 2, x)
    return (1 - inside_x) + (1 - inside_p)


def _wigner_errors(psi, grid):
    field = wigner(psi, grid)
    dens = np.abs(wavefunction(psi, grid.xs)) ** 2
    return (abs(field.integral() - 1), abs(purity(field) - 1),
            float(np.max(np.abs(marginal_x(field) - dens))))


def test_criterion_4_wigner_identities(report):
    start = time.perf_counter()
    grid = PhaseSpaceGrid(-6, 6, -6, 6, 256, 256)
    wide = PhaseSpaceGrid(-9, 9, -9, 9, 384, 384)
    gated = [0.0, 0.0, 0.0]
    notes = []
    for spec in WIGNER_ZOO:
        psi = build_state(spec)
        errs = _wigner_errors(psi, grid)
        outside = _mass_outside(psi, 6.0)
        if outside < 1e-4:
            gated = [max(a, b) for a, b in zip(gated, errs)]
        else:
            # the window cuts off real probability, so no exact field integrates to 1 on it
            wide_errs = _wigner_errors(psi, wide)
            gated = [max(a, b) for a, b in zip(gated, wide_errs)]
            notes.append(f"{spec.kind}(n={spec.n}) has {outside:.1e} outside [-6,6]^2: "
                         f"norm error {errs[0]:.1e} there, {wide_errs[0]:.1e} on [-9,9]^2")
    psi = build_state(WIGNER_ZOO[0])
    spot_err = 0.0
    for x, p in SPOTS:
        direct = wigner_by_integral(lambda u: wavefunction(psi, u), x, p)
        spot_err = max(spot_err, abs(wigner_points(psi, x, p) - direct))
    elapsed = time.perf_counter() - start
    ok = max(gated) < 1e-3 and spot_err < 1e-6 and elapsed < 120
    report(4, "Wigner normalization, purity, marginals, spot checks", ok,
           f"norm {gated[0]:.1e}, purity {gated[1]:.1e}, marginal {gated[2]:.1e}, "
           f"y-integral {spot_err:.1e}; {elapsed:.1f}s; " + "; ".join(notes))


def test_criterion_5_overlap_and_curvature(report):
    grid = PhaseSpaceGrid(-6, 6, -6, 6, 256, 256)
    wig_err = 0.0
    for spec, delta in [(StateSpec.fock(0), 0.5), (StateSpec.ssns(0.45, 1), 0.1 + 0.1j),
                        (StateSpec.compass(2.0, 0, -1), 0.3j), (StateSpec.ssdns(0.45, 2.0, 1), 0.2)]:
        psi = build_state(spec)
        wig_err = max(wig_err, abs(overlap_via_wigner(psi, delta, grid) - displaced_overlap(psi, delta)))
    zoo = [StateSpec.coherent(0.7 + 0.2j), StateSpec.fock(3), StateSpec.compass(2.0, 0, -1),
           StateSpec.ssns(0.5, 1), StateSpec.ssdns(0.63, 1.2, 1), StateSpec.cat(1.5, -1)]
    fd_err = 0.0
    for spec in zoo:
        psi = build_state(spec)
        for th in (0.0, math.pi / 4, math.pi / 2):
            c = overlap_curvature(psi, th)
            fd_err = max(fd_err, abs(curvature_finite_difference(psi, th) - c) / c)
    coh_err = max(abs(overlap_curvature(build_state(StateSpec.coherent(a)), th) - 1)
                  for a in (0, 1.0, 2 - 1j) for th in (0.0, 1.0))
    fock_err = max(abs(overlap_curvature(build_state(StateSpec.fock(n)), th) - (2 * n + 1))
                   for n in range(8) for th in (0.0, 1.0))
    ok = wig_err < 1e-3 and fd_err < 1e-6 and coh_err < 1e-10 and fock_err < 1e-8
    report(5, "Wigner overlap identity and curvature", ok,
           f"overlap {wig_err:.1e}, finite-diff rel {fd_err:.1e}, coherent {coh_err:.1e}, "
           f"Fock {fock_err:.1e}")


def test_criterion_6_sweep_and_ratio_properties(report):
    betas = np.linspace(1, 3, 41)
    reps = [variance_report(StateSpec.compass(b, 0, -1), 0.0) for b in betas]
    var_dec = bool(np.all(np.diff([r.variance for r in reps]) < 0))
    mean_inc = bool(np.all(np.diff([r.mean_n for r in reps]) > 0))
    rho = spearman([r.c for r in reps], [r.mean_n for r in reps])
    spec = StateSpec.ssdns(0.2, 0.7, 1)
    crossings = {}
    for name, th in (("0", 0.0), ("pi/4", math.pi / 4), ("pi/2", math.pi / 2)):
        t = ratio_curves(spec, lambda b: StateSpec.compass(b, 0, -1), np.linspace(0.5, 2, 61), th)
        crossings[name] = (t.variance_crossings, t.mean_n_crossings)
    both = [k for k, (v, m) in crossings.items() if v and m]
    ok = var_dec and mean_inc and rho > 0.9 and bool(both)
    detail = ", ".join(f"theta={k}: var {[round(x, 3) for x in v]} mean {[round(x, 3) for x in m]}"
                       for k, (v, m) in crossings.items())
    report(6, "compass sweep monotonicity and ratio crossings", ok,
           f"R*var decreasing {var_dec}, <n> increasing {mean_inc}, spearman {rho:.3f}; {detail}")


def test_criterion_7_damping_limits(report):
    rows = fig6_curves([0.05])
    limit_ok = all(ratio < 1e-3 and abs(inv - 1) < 1e-2 for _, _, ratio, inv in rows)
    fock_err = 0.0
    for n in (1, 2, 4):
        for kappa, t in ((0.0, 1.0), (0.1, 0.5), (0.3, 2.0)):
            est = damping_error(StateSpec.fock(n), kappa, t)
            eta = math.exp(-2 * kappa * t)
            fock_err = max(fock_err, abs(est.delta_kappa - math.sqrt((1 / eta - 1) / (4 * t * t * n))))
    report(7, "damping small-beta limit and Fock formula", limit_ok and fock_err < 1e-15,
           "; ".join(f"{lab}: var/mean^2 {ratio:.1e}, 1/<N> {inv:.6f}" for _, lab, ratio, inv in rows)
           + f"; Fock formula max |diff| {fock_err:.1e}")


def test_criterion_8_preparation(report):
    check = h1_diagonalization_check(RabiParams.h1(1.0, 0.3, 0.2), dim=80, guard=20)
    h1_fid = min(min(check.branch_fidelity.values()), min(check.joint_fidelity.values()))
    h1_ok = check.residual < 1e-8 and h1_fid > 1 - 1e-8
    p = RabiParams.h2(0.1, 0.2, 1.0)
    cons = 0.0
    initial = QubitOscillatorState.product(fock.basis(0, 80), PLUS).sector_populations()
    for t in (1.0, 5.0, 10.0):
        s = evolve_h2(p, 0, t)
        cons = max(cons, abs(s.norm - 1),
                   *(abs(v - initial[k]) for k, v in s.sector_populations().items()))
    rows = ssns_scan(p, 0, np.linspace(0.25, 10, 40))
    squeezed = [r for r in rows if r.r_best >= 0.1]
    best = max(squeezed, key=lambda r: r.fidelity_best)
    closed = [r.closed_form_overlap for r in rows]
    ok = h1_ok and cons < 1e-10 and best.fidelity_best > 0.99
    report(8, "preparation models", ok,
           f"H1 residual {check.residual:.1e}, min eigvec fidelity {h1_fid:.12f}; "
           f"H2 conservation {cons:.1e}; best SSNS fidelity {best.fidelity_best:.5f} at "
           f"t={best.t:.3f}, r={best.r_best:.4f} (published r(t) gives {best.fidelity_published_r:.5f}); "
           f"closed-form overlap (reported only) {min(closed):.4f}..{max(closed):.4f}")


def test_criterion_9_monte_carlo(report):
    proto = TLSProtocol(build_state(StateSpec.coherent(1.0)), 0.1)
    R = 10 ** 5
    est = np.array([proto.run(R, seed).s_hat for seed in range(400)])
    predicted = proto.delta_method_variance(R)
    ratio = est.var(ddof=1) / predicted
    repeat = proto.run(R, 123) == proto.run(R, 123)
    ok = abs(ratio - 1) <= 0.15 and repeat
    report(9, "readout protocol Monte Carlo", ok,
           f"Var(s_hat) {est.var(ddof=1):.3e} vs delta method {predicted:.3e} "
           f"(ratio {ratio:.3f}); mean {est.mean():.5f} vs s={0.1 ** 2}; reproducible {repeat}")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
