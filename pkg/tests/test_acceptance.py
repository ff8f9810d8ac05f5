"""Acceptance criteria 1 to 11, one test each.

Every test records a single PASS or FAIL line; the lines are printed in the
pytest terminal summary and also when this file is run as a script.
"""

import math
import time

import numpy as np

from acceptance_log import record
from oracles import FROZEN
from phicat import (
    BoundaryData,
    GraphPatch,
    Integrability,
    IntegrationOptions,
    WeightSpec,
    classify_integrability,
    first_variation,
    grim_reaper_patch,
    half_width,
    identity_residuals,
    integrate_profile,
    make_boundary_from_profile,
    perturbed_cylinder_build,
    quotient_formula_check,
    solve_graph_equation,
    symmetry_defect,
    uniqueness_experiment,
    width_table,
)
from phicat.geometry import interior_mask, refinement_study

ID = WeightSpec.identity()
GRIM_X, GRIM_Y = (-1.2, 1.2), (-1.0, 1.0)


def _grim_grid(n):
    return GraphPatch(GRIM_X, GRIM_Y, np.zeros((n, n)))


def _grim_solve(n):
    grid = _grim_grid(n)
    return solve_graph_equation(ID, grid, BoundaryData.from_function(lambda X, Y: -np.log(np.cos(X)), grid))


def _bump(patch, centre, radius=0.4):
    X, Y = patch.mesh()
    r2 = ((X - centre[0]) ** 2 + (Y - centre[1]) ** 2) / radius**2
    return np.where(r2 < 1, (1 - r2) ** 3, 0.0)


def test_criterion_01_grim_reaper_half_width():
    start = time.perf_counter()
    w = half_width(ID, 0.0)
    elapsed = time.perf_counter() - start
    err = abs(w - math.pi / 2)
    ok = err <= 1e-6 and elapsed < 1.0
    record(1, "grim-reaper half-width", ok, f"|Lambda - pi/2| = {err:.2e}, {elapsed:.3f} s")
    assert ok


def test_criterion_02_first_integral_consistency():
    start = time.perf_counter()
    sol = integrate_profile(ID, 0.0)
    elapsed = time.perf_counter() - start
    # samples with x <= 0.95 Lambda keep u' finite enough for a relative test to mean something
    keep = sol.x <= 0.95 * math.pi / 2
    gap = np.abs(sol.uprime[keep] - np.sqrt(np.expm1(2 * sol.u[keep])))
    ok = float(gap.max()) <= 1e-7 and elapsed < 1.0
    record(2, "first-integral consistency", ok, f"max |u' - sqrt(e^2u - 1)| = {gap.max():.2e} on {keep.sum()} samples, {elapsed:.3f} s")
    assert ok


def test_criterion_03_asymptotic_slope_bounded_range():
    sol = integrate_profile(WeightSpec.arctan(), 0.0, IntegrationOptions(x_cap=1e4))
    target = FROZEN["arctan_slope_h0"]
    assert abs(target - math.sqrt(math.expm1(math.pi))) <= 1e-12
    x_last, slope = float(sol.x[-1]), float(sol.uprime[-1])
    err = abs(slope - target)
    ok = x_last >= 50 and err <= 1e-3
    record(3, "arctan asymptotic slope", ok, f"u'({x_last:.0f}) = {slope:.6f}, error {err:.2e}")
    assert ok


def test_criterion_04_integrability_classification():
    got = {a: classify_integrability(WeightSpec.alpha_log(a), 1.0) for a in (0.5, 1, 1.5, 2, 3)}
    expected = {a: Integrability.FINITE if a > 1 else Integrability.INFINITE for a in got}
    ok = got == expected
    record(4, "alpha_log integrability", ok, ", ".join(f"alpha={a:g}: {v.value}" for a, v in got.items()))
    assert ok


def test_criterion_05_width_monotonicity():
    quad = width_table(WeightSpec.quadratic(), [1, 2, 3])
    alog = width_table(WeightSpec.alpha_log(2), [1, 2, 3])
    ident = width_table(ID, [1, 2, 3])
    ok = (
        bool(np.all(np.diff(quad.widths) < 0))
        and bool(np.all(np.diff(alog.widths) > 0))
        and float(np.ptp(ident.widths)) <= 1e-9
    )
    ok = ok and np.allclose(quad.widths, [FROZEN[f"quadratic_h{h}"] for h in (1, 2, 3)], rtol=0, atol=1e-8)
    ok = ok and abs(alog.widths[0] - FROZEN["alpha_log2_h1"]) <= 1e-8
    record(
        5,
        "width monotonicity",
        ok,
        f"quadratic {quad.observed}, alpha_log(2) {alog.observed}, identity spread {np.ptp(ident.widths):.1e}",
    )
    assert ok


def test_criterion_06_pde_oracle_match():
    start = time.perf_counter()
    errors = []
    for n in (33, 65, 129):
        patch, rep = _grim_solve(n)
        X, _ = patch.mesh()
        errors.append(float(np.max(np.abs(patch.values - (-np.log(np.cos(X)))))))
    elapsed = time.perf_counter() - start
    orders = [math.log2(a / b) for a, b in zip(errors, errors[1:])]
    ok = errors[-1] <= 1e-3 and min(orders) >= 1.8 and elapsed < 60
    record(6, "grim-reaper Dirichlet solve", ok, f"errors {', '.join(f'{e:.2e}' for e in errors)}, orders {', '.join(f'{o:.2f}' for o in orders)}, {elapsed:.2f} s")
    assert ok


def test_criterion_07_fundamental_equation_residuals():
    # the axis-aligned patch has eta2 = 0, so the quotient identity vanishes
    # identically there; a rotated copy on a window away from the steep edges
    # exercises it for real
    details, ok = [], True
    for angle, xr, yr in ((0.0, GRIM_X, GRIM_Y), (0.3, (-0.9, 0.9), (-0.9, 0.9))):
        norms, orders = refinement_study(lambda n: grim_reaper_patch(xr, yr, n=n, angle=angle), ID)
        for key, vals in norms.items():
            if max(vals) == 0.0:
                details.append(f"{key}@{angle:g} = 0")
                continue
            ok = ok and min(orders[key]) >= 1.8
            details.append(f"{key}@{angle:g} order {min(orders[key]):.2f}")
    x1 = identity_residuals(grim_reaper_patch(GRIM_X, GRIM_Y, n=129), ID, tol=np.inf).coordinate_x1
    ok = ok and x1 <= 1e-4
    record(7, "fundamental-equation residuals", ok, f"Delta x1 residual {x1:.2e} at 129^2; " + "; ".join(details))
    assert ok


def test_criterion_08_quotient_formula_cross_check():
    worst, ok = 0.0, True
    for spec, h in ((ID, 0.0), (WeightSpec.alpha_log(2), 1.0)):
        profile = integrate_profile(spec, h)
        for family in ("sin_edge", "cubic_cos", "tilted_wave"):
            rep = quotient_formula_check(perturbed_cylinder_build(profile, family), spec)
            ok = ok and rep.passed and rep.max_discrepancy <= 1e-10
            worst = max(worst, rep.max_discrepancy)
    record(8, "quotient-formula cross-check", ok, f"max discrepancy {worst:.2e} over 3 families x 2 weights")
    assert ok


def test_criterion_09_reflection_symmetry():
    defects = []
    profile = integrate_profile(ID, 0.0)
    for n in (33, 65):
        grid = _grim_grid(n)
        for pert in (None, (0.05, 1.0, 1.2)):
            patch, _ = solve_graph_equation(ID, grid, make_boundary_from_profile(profile, grid, perturbation=pert))
            defects.append(symmetry_defect(patch))
    worst = max(defects)
    ok = worst <= 1e-10
    record(9, "reflection symmetry", ok, f"max defect {worst:.2e} over {len(defects)} solves with even data")
    assert ok


def test_criterion_10_uniqueness_experiment():
    rep = uniqueness_experiment(ID, 0.0, n=65, amplitudes=(0.0, 0.05, 0.2))
    ok = rep.pairwise_agreement <= 1e-8 and max(rep.max_eta2) <= 1e-8 and all(r.converged for r in rep.reports)
    record(10, "uniqueness experiment", ok, f"pairwise {rep.pairwise_agreement:.2e}, max |eta2| {max(rep.max_eta2):.2e}")
    assert ok


def test_criterion_11_first_variation():
    patch, _ = _grim_solve(129)
    values = [first_variation(patch, ID, _bump(patch, c)) for c in ((0.0, 0.0), (0.5, 0.3), (-0.7, -0.2))]
    worst = max(abs(v) for v in values)
    ok = worst <= 1e-4
    record(11, "first-variation criticality", ok, "values " + ", ".join(f"{v:.2e}" for v in values))
    assert ok


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items()):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    raise SystemExit(1 if failed else 0)
