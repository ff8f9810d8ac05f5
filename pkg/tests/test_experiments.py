import math

import numpy as np
import pytest

from phicat import (
    UBAR_FAMILIES,
    BoundaryData,
    EmptyOverlap,
    GraphPatch,
    NotMinimal,
    StripViolation,
    WeightSpec,
    decay_bound_check,
    eta_quotient_extremum_check,
    grim_reaper_patch,
    integrate_profile,
    make_boundary_from_profile,
    moving_plane_check,
    perturbed_cylinder_build,
    quotient_formula_check,
    solve_graph_equation,
)
from phicat.experiments import UbarFamily, closed_form_quotient

ID = WeightSpec.identity()
A2 = WeightSpec.alpha_log(2)


@pytest.fixture(scope="module")
def grim_profile():
    return integrate_profile(ID, 0.0)


@pytest.fixture(scope="module")
def alpha_profile():
    return integrate_profile(A2, 1.0)


@pytest.mark.parametrize("name", UBAR_FAMILIES)
def test_family_partials_match_differences(name):
    fam = UbarFamily(name, eps=0.3, lam=1.4, kappa=0.7)
    rng = np.random.default_rng(7)
    for x, y in rng.uniform(-1, 1, size=(5, 2)):
        u, u1, u2, u12 = fam.evaluate(x, y)
        e = 1e-5
        assert (fam.evaluate(x + e, y)[0] - fam.evaluate(x - e, y)[0]) / (2 * e) == pytest.approx(u1, abs=1e-9)
        assert (fam.evaluate(x, y + e)[0] - fam.evaluate(x, y - e)[0]) / (2 * e) == pytest.approx(u2, abs=1e-9)
        assert (fam.evaluate(x, y + e)[1] - fam.evaluate(x, y - e)[1]) / (2 * e) == pytest.approx(u12, abs=1e-9)


def test_unknown_family():
    with pytest.raises(ValueError):
        UbarFamily("nope").evaluate(0.0, 0.0)


def test_trivial_perturbations(grim_profile):
    zero = perturbed_cylinder_build(grim_profile, "zero")
    np.testing.assert_array_equal(zero.F_tilde, zero.F)
    const = perturbed_cylinder_build(grim_profile, "constant", eps=0.02)
    np.testing.assert_allclose(const.F_tilde, const.F + 0.02 * const.N_F)
    for name in ("zero", "constant", "x1_only"):
        pc = perturbed_cylinder_build(grim_profile, name)
        formula, _ = closed_form_quotient(pc, ID)
        assert np.all(formula == 0)
        assert quotient_formula_check(pc, ID).max_discrepancy == 0.0


def test_sin_edge_is_a_graph_and_formula_agrees(grim_profile):
    pc = perturbed_cylinder_build(grim_profile, "sin_edge", eps=0.01)
    assert pc.is_graph
    rep = quotient_formula_check(pc, ID)
    assert rep.max_discrepancy <= 1e-12 and rep.passed
    assert rep.min_denominator >= 0.5


@pytest.mark.parametrize("name", ["sin_edge", "cubic_cos", "tilted_wave"])
@pytest.mark.parametrize("which", ["grim", "alpha"])
def test_quotient_formula_families(name, which, grim_profile, alpha_profile):
    prof, spec = (grim_profile, ID) if which == "grim" else (alpha_profile, A2)
    rep = quotient_formula_check(perturbed_cylinder_build(prof, name), spec)
    assert rep.passed and rep.max_discrepancy <= 1e-10
    assert rep.max_abs_quotient > 1e-3


def test_large_perturbation_fails_denominator_requirement(grim_profile):
    rep = quotient_formula_check(perturbed_cylinder_build(grim_profile, "x1_only", eps=0.8), ID)
    assert rep.min_denominator < 0.5 and not rep.passed


def test_strip_violation(grim_profile):
    with pytest.raises(StripViolation):
        perturbed_cylinder_build(grim_profile, "sin_edge", strip=((0.0, 1.6), (-1, 1)))
    with pytest.raises(StripViolation):
        perturbed_cylinder_build(grim_profile, "sin_edge", strip=((0.5, 0.2), (-1, 1)))


def test_decay_bound_and_edge_limits(grim_profile):
    rep = decay_bound_check(perturbed_cylinder_build(grim_profile, "sin_edge"))
    assert rep.passed and rep.bound_holds
    assert rep.min_slack_near_edge >= 2.0 - 1e-9
    # (pi/2 - x) sec x -> 1 and cos x -> 0
    assert rep.limit_width_sec[-1] == pytest.approx(1.0, abs=1e-5)
    assert rep.limit_phi_cos[-1] == pytest.approx(rep.cos_levels[-1], rel=1e-9)
    assert rep.limits_finite


@pytest.mark.parametrize("name", ["sin_edge", "cubic_cos", "tilted_wave"])
def test_decay_bound_all_families(name, grim_profile, alpha_profile):
    for prof in (grim_profile, alpha_profile):
        assert decay_bound_check(perturbed_cylinder_build(prof, name)).passed


def test_alpha_log_edge_width_limit_diverges(alpha_profile):
    rep = decay_bound_check(perturbed_cylinder_build(alpha_profile, "sin_edge"))
    # sec(theta) = (u/h)^2 while Lambda - x ~ 1/u, so the product grows like u
    assert not rep.limits_finite
    vals = rep.limit_width_sec
    assert all(b > 2 * a for a, b in zip(vals, vals[1:]))


def test_decay_not_applicable_for_infinite_width():
    prof = integrate_profile(WeightSpec.arctan(), 0.0, x_cap=20.0)
    rep = decay_bound_check(perturbed_cylinder_build(prof, "sin_edge"))
    assert not rep.applicable and rep.passed


def test_moving_plane_on_even_patch():
    p = grim_reaper_patch(n=65)
    assert moving_plane_check(p, 0.0).max_abs_gap <= 1e-12


def test_moving_plane_gap_sign_at_positive_t():
    p = grim_reaper_patch(n=129)
    rep = moving_plane_check(p, 0.3)
    assert rep.min_gap >= -1e-12
    assert rep.x1.max() <= 0.3 + 1e-12 and rep.x1.min() >= 2 * 0.3 - 1.2 - 1e-12
    # spline interpolation of the reflected values against the closed form
    X2 = 2 * 0.3 - rep.x1
    exact = -np.log(np.cos(X2)) + np.log(np.cos(rep.x1))
    np.testing.assert_allclose(rep.gaps[:, 0], exact, atol=1e-6)


def test_moving_plane_empty_overlap():
    with pytest.raises(EmptyOverlap):
        moving_plane_check(grim_reaper_patch(n=17), -1.3)
    with pytest.raises(EmptyOverlap):
        moving_plane_check(grim_reaper_patch(n=17), 1.3)


def test_moving_plane_on_solved_patch():
    g = GraphPatch((-1.2, 1.2), (-1, 1), np.zeros((65, 65)))
    patch, _ = solve_graph_equation(ID, g, BoundaryData.from_function(lambda X, Y: -np.log(np.cos(X)), g))
    assert moving_plane_check(patch, 0.0).max_abs_gap <= 1e-10


def test_extremum_check(grim_profile):
    g = GraphPatch((-1.2, 1.2), (-1, 1), np.zeros((65, 65)))
    flat, _ = solve_graph_equation(ID, g, make_boundary_from_profile(grim_profile, g))
    rep = eta_quotient_extremum_check(flat, ID)
    # continuous boundary data leaves an O(dx^2) eta2 on the discrete solution
    assert rep.passed and max(rep.boundary_max, rep.interior_max) <= 1e-3
    bumped, _ = solve_graph_equation(ID, g, make_boundary_from_profile(grim_profile, g, perturbation=(0.01, 1, 1)))
    rep = eta_quotient_extremum_check(bumped, ID)
    assert rep.passed and rep.boundary_max > 1e-2
    assert rep.interior_max <= rep.boundary_max + 1e-8
    with pytest.raises(NotMinimal):
        eta_quotient_extremum_check(GraphPatch.from_function(lambda X, Y: 0.3 * X * Y, (-1, 1), (-1, 1), 9, 9), ID)
