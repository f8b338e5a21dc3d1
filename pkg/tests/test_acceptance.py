"""Acceptance gate: the eleven end-to-end criteria with pinned tolerances.

Each test contributes exactly one summary line, echoed in the terminal
summary at the end of the run, of the form

    [criterion NN] PASS/FAIL  <short description>: <measured values>

so the whole gate can be audited at a glance.  Oracles are independent of the
code under test: closed forms, scipy.special Bessel zeros, and the radial
shooting integrator (which never touches the FEM assembly).
"""

import math

import numpy as np
import pytest
from scipy.special import jn_zeros

from plapd.eigen import first_eigenpair, lumped_lp_norm
from plapd.existence import HomotopyConfig, estimate_lambda_max, fixed_point_solve
from plapd.fem import InnerProblem, inner_solve
from plapd.geometry import interpolate_radial, mesh_disc, refine
from plapd.identities import (energy_identity_residual, hopf_boundary_check,
                              monotonicity_diagnostic, picone_value,
                              pohozaev_residual)
from plapd.nonlinearity import (Verdict, classify, constant, log_critical,
                                power)
from plapd.radial import (NoSolutionFound, radial_eigen, radial_shoot,
                          radial_solve_bvp, torsion_exact, torsion_profile)


from _gate import report


# ---------------------------------------------------------------------------

def test_criterion_01_torsion_oracle(disc_fine, disc_refined, torsion_solves):
    """FEM torsion vs closed form: <= 5% sup error at h = 0.05 for
    p in {1.5, 2, 3}, refinement error ratio >= 1.5."""
    results = []
    for p in (1.5, 2.0, 3.0):
        u = torsion_solves[p].solution
        r = np.linalg.norm(disc_fine.nodes, axis=1)
        exact = np.array([torsion_exact(p, 2, min(float(ri), 1.0)) for ri in r])
        err = float(np.max(np.abs(u.values - exact))) / exact.max()
        fine = inner_solve(InnerProblem(disc_refined, p, 1.0, tol=1e-10))
        rf = np.linalg.norm(disc_refined.nodes, axis=1)
        exact_f = np.array([torsion_exact(p, 2, min(float(ri), 1.0)) for ri in rf])
        err_f = float(np.max(np.abs(fine.solution.values - exact_f))) / exact_f.max()
        results.append((p, err, err / err_f))
    ok = all(e <= 0.05 and ratio >= 1.5 for _, e, ratio in results)
    txt = ", ".join(f"p={p}: err={e:.2%} ratio={r:.2f}" for p, e, r in results)
    report(1, ok, f"torsion oracle: {txt}")
    assert ok


def test_criterion_02_pohozaev_closed_form(disc_fine, disc_refined,
                                           torsion_solves):
    """Both Pohozaev sides equal pi/4 for p = 2 torsion; discrete residual
    <= 5% at h = 0.05 and decreasing under refinement."""
    u_exact = interpolate_radial(torsion_profile(2.0, 2, 1.0), disc_fine)
    rep_exact = pohozaev_residual(u_exact, constant(1.0), 2.0)
    quarter_pi_ok = (abs(rep_exact.left - math.pi / 4) < 0.01 * math.pi / 4
                     and abs(rep_exact.right - math.pi / 4) < 0.01 * math.pi / 4)
    rep_h = pohozaev_residual(torsion_solves[2.0].solution, constant(1.0), 2.0)
    fine = inner_solve(InnerProblem(disc_refined, 2.0, 1.0, tol=1e-10))
    rep_h2 = pohozaev_residual(fine.solution, constant(1.0), 2.0)
    ok = (quarter_pi_ok and rep_h.relative <= 0.05
          and rep_h2.relative < rep_h.relative)
    report(2, ok, f"pohozaev: sides ({rep_exact.left:.5f}, {rep_exact.right:.5f})"
                  f" vs pi/4={math.pi/4:.5f}, residual {rep_h.relative:.2%}"
                  f" -> {rep_h2.relative:.2%} under refinement")
    assert ok


def test_criterion_03_eigenvalue(disc_fine, eigenpair_p2):
    """lambda1 within 2% of j01^2 (oracle radial_eigen), scaling law within
    1%, phi1 >= 0 with unit lumped norm."""
    oracle = radial_eigen(2.0, 2, 1.0)
    j01_sq = jn_zeros(0, 1)[0] ** 2
    assert abs(oracle - j01_sq) / j01_sq < 1e-8   # oracle self-check
    rel = abs(eigenpair_p2.lam - oracle) / oracle
    mesh2 = mesh_disc(2.0, 0.1)
    pair2 = first_eigenpair(2.0, mesh2, tol=1e-8)
    scaling = abs(eigenpair_p2.lam - pair2.lam * 4.0) / eigenpair_p2.lam
    phi = eigenpair_p2.phi
    norm = lumped_lp_norm(phi, 2.0)
    ok = (rel <= 0.02 and scaling <= 0.01 and np.all(phi.values >= 0)
          and abs(norm - 1.0) < 1e-9)
    report(3, ok, f"eigenvalue: lam={eigenpair_p2.lam:.5f} vs {oracle:.5f}"
                  f" ({rel:.2%}), R-scaling spread {scaling:.2%}, |phi|_p={norm:.6f}")
    assert ok


def test_criterion_04_picone_gate(torsion_solves, cubic_solution, eigenpair_p2):
    """picone_value <= 1.02 lambda1 for every converged regression solution."""
    worst = -math.inf
    cases = [(torsion_solves[2.0].solution, constant(1.0)),
             (cubic_solution.solution, power(3.0))]
    for u, f in cases:
        rep = picone_value(u, f, 2.0, eigenpair_p2)
        worst = max(worst, rep.left / eigenpair_p2.lam)
    ok = worst <= 1.02
    report(4, ok, f"picone gate: worst value/lambda1 = {worst:.4f} (<= 1.02)")
    assert ok


def test_criterion_05_energy_identity(torsion_solves, cubic_solution):
    """Relative energy-identity residual <= 1% on every converged solution."""
    residuals = []
    for p, rep in torsion_solves.items():
        residuals.append(energy_identity_residual(rep.solution, constant(1.0), p).relative)
    residuals.append(
        energy_identity_residual(cubic_solution.solution, power(3.0), 2.0).relative)
    worst = max(residuals)
    ok = worst <= 0.01
    report(5, ok, f"energy identity: worst residual {worst:.2e} (<= 1e-2)")
    assert ok


def test_criterion_06_homogeneity(disc_fine):
    """inner_solve(s g) = s^(1/(p-1)) inner_solve(g) within 1e-6 for s = 7."""
    s = 7.0
    worst = 0.0
    for p in (1.5, 3.0):
        u1 = inner_solve(InnerProblem(disc_fine, p, 1.0, tol=1e-11)).solution
        u2 = inner_solve(InnerProblem(disc_fine, p, s, tol=1e-11)).solution
        scale = s ** (1.0 / (p - 1.0))
        worst = max(worst, float(np.max(np.abs(u2.values - scale * u1.values)))
                    / (scale * u1.sup_norm))
    ok = worst <= 1e-6
    report(6, ok, f"homogeneity s=7: worst relative sup deviation {worst:.2e}")
    assert ok


def test_criterion_07_comparison_principle(disc_coarse):
    """20 seeded ordered-load pairs per p in {1.5, 2, 3}: nodewise ordering."""
    from plapd.identities import comparison_check
    rng = np.random.default_rng(1234)
    failures = 0
    for p in (1.5, 2.0, 3.0):
        for _ in range(20):
            g1 = rng.uniform(0.0, 1.0, disc_coarse.n_nodes)
            g2 = g1 + rng.uniform(0.0, 1.0, disc_coarse.n_nodes)
            rep = comparison_check(g1, g2, p, disc_coarse, solver_tol=1e-8)
            failures += 0 if rep.passed else 1
    ok = failures == 0
    report(7, ok, f"comparison principle: {failures} failures out of 60 pairs")
    assert ok


def test_criterion_08_hypothesis_classifier():
    """Example nonlinearity (log-critical alpha=3, p=2, N=3): H3'' liminf
    within 10% of alpha/p* = 0.5, H4'' holds; critical power: H3', H4' fail."""
    rep = classify(log_critical(3.0, 2.0, 3), 2.0, 3)
    liminf = rep.witnesses["h3pp_liminf"]
    crit = classify(power(5.0), 2.0, 3)
    ok = (abs(liminf - 0.5) <= 0.05 and rep.h4pp is Verdict.HOLDS
          and crit.h3p is Verdict.FAILS and crit.h4p is Verdict.FAILS)
    report(8, ok, f"classifier: h3'' liminf {liminf:.4f} (target 0.5),"
                  f" h4''={rep.h4pp}, critical h3'={crit.h3p} h4'={crit.h4p}")
    assert ok


def test_criterion_09_existence_end_to_end(disc_fine, cubic_solution):
    """fixed_point_solve for u^3 matches radial_solve_bvp within 5% sup;
    Hopf and monotonicity diagnostics pass."""
    oracle = interpolate_radial(radial_solve_bvp(2.0, 2, power(3.0), 1.0),
                                disc_fine)
    u = cubic_solution.solution
    rel = float(np.max(np.abs(u.values - oracle.values))) / oracle.sup_norm
    hopf = hopf_boundary_check(u)
    mono = monotonicity_diagnostic(u)
    ok = (cubic_solution.converged and rel <= 0.05 and hopf.passed
          and mono.passed)
    report(9, ok, f"existence u^3: sup dev {rel:.2%} vs oracle"
                  f" (sup {oracle.sup_norm:.4f}), hopf={hopf.passed},"
                  f" monotone={mono.passed}")
    assert ok


def test_criterion_10_nonexistence_threshold(disc_coarse, disc_fine):
    """estimate_lambda_max for u^3 + lambda: finite bracket, solvable at the
    bottom, divergent at the top, stable (x2) across two mesh levels."""
    f = power(3.0)
    rep_a = estimate_lambda_max(f, 2.0, disc_coarse, bisections=8)
    rep_b = estimate_lambda_max(f, 2.0, disc_fine, bisections=8)
    finite = not rep_a.lower_bound_only and not rep_b.lower_bound_only
    solvable_bottom = rep_a.points[0][1] is True
    ratio = rep_a.lambda_hat / rep_b.lambda_hat if finite else math.inf
    ok = finite and solvable_bottom and 0.5 <= ratio <= 2.0
    report(10, ok, f"nonexistence threshold: lambda_hat {rep_a.lambda_hat:.4f}"
                   f" (coarse) vs {rep_b.lambda_hat:.4f} (fine), ratio {ratio:.3f},"
                   f" anomalies {rep_a.anomalies + rep_b.anomalies}")
    assert ok


def test_criterion_11_critical_scaling_oracle():
    """u^5, p=2, N=3 shooting: no zero crossing, the Aubin-Talenti bubble
    width obeys r_half(m) = 3 m^-2 within 1e-4; the unit-ball BVP reports
    no-solution-found."""
    worst = 0.0
    for m in (1.0, 2.0, 4.0):
        res = radial_shoot(2.0, 3, power(5.0), m, r_max=50.0)
        assert res.first_zero is None
        worst = max(worst, abs(res.half_height * m ** 2 / 3.0 - 1.0))
    try:
        radial_solve_bvp(2.0, 3, power(5.0), 1.0)
        obstructed = False
    except NoSolutionFound:
        obstructed = True
    ok = worst <= 1e-4 and obstructed
    report(11, ok, f"critical scaling: max |m^2 r_half/3 - 1| = {worst:.2e},"
                   f" BVP obstruction raised = {obstructed}")
    assert ok
