import math
import time
import warnings

import numpy as np
import pytest

from oracles import FROZEN
from phicat import (
    DomainError,
    IntegrationOptions,
    WeightSpec,
    asymptotic_slope,
    first_integral_slope,
    half_width,
    integrate_profile,
    reflect,
    width_table,
)

ID = WeightSpec.identity()
A2 = WeightSpec.alpha_log(2)


@pytest.fixture(scope="module")
def grim():
    return integrate_profile(ID, 0.0)


def test_grim_reaper_closed_form_values(grim):
    u, up = grim.evaluate(1.0)
    assert u == pytest.approx(FROZEN["grim_u_1"], abs=1e-8)
    assert up == pytest.approx(FROZEN["grim_up_1"], abs=1e-7)
    u, up = grim.evaluate(math.pi / 3)
    assert u == pytest.approx(math.log(2), abs=1e-8)
    assert up == pytest.approx(math.sqrt(3), abs=1e-7)


@pytest.mark.parametrize("spec, h", [(ID, 0.0), (ID, -3.0), (A2, 1.0), (WeightSpec.quadratic(), 2.0), (WeightSpec.arctan(), 0.5)])
def test_first_sample_is_the_initial_condition(spec, h):
    sol = integrate_profile(spec, h, x_cap=20.0)
    assert (sol.x[0], sol.u[0], sol.uprime[0]) == (0.0, h, 0.0)


def test_first_integral_slope_examples():
    assert first_integral_slope(ID, 0.0, 0.0) == 0.0
    assert first_integral_slope(ID, 0.0, math.log(2)) == pytest.approx(math.sqrt(3), rel=1e-14)
    assert first_integral_slope(A2, 1.0, 2.0) == pytest.approx(math.sqrt(15), rel=1e-14)
    with pytest.raises(DomainError):
        first_integral_slope(ID, 1.0, 0.0)


def test_half_width_examples():
    assert half_width(ID, 0.0) == pytest.approx(math.pi / 2, abs=1e-12)
    assert half_width(A2, 1.0) == pytest.approx(FROZEN["alpha_log2_h1"], rel=1e-12)
    assert half_width(WeightSpec.arctan(), 0.0) == math.inf
    assert half_width(WeightSpec.arctan(), 5.0) == math.inf
    for k, h in enumerate((1, 2, 3), start=1):
        assert half_width(WeightSpec.quadratic(), h) == pytest.approx(FROZEN[f"quadratic_h{h}"], rel=1e-12)


def test_half_width_of_linear_weight_scales_as_one_over_k():
    # the profile of phi = k x is the grim reaper scaled by 1/k
    assert half_width(WeightSpec.linear(4.0), 1.0) == pytest.approx(math.pi / 8, rel=1e-12)


def test_asymptotic_slope_examples():
    assert asymptotic_slope(WeightSpec.arctan(), 0.0) == pytest.approx(FROZEN["arctan_slope_h0"], rel=1e-14)
    assert asymptotic_slope(ID, 0.0) == math.inf
    vals = [asymptotic_slope(WeightSpec.arctan(), h) for h in (0, 1, 10, 100)]
    assert all(a > b for a, b in zip(vals, vals[1:])) and vals[-1] < 0.2


def test_width_tables():
    t = width_table(ID, [0, 1, 2])
    assert t.widths == pytest.approx((math.pi / 2,) * 3, abs=1e-12)
    assert t.observed == "constant" and t.predicted == "constant"
    t = width_table(A2, [1, 2, 3])
    assert t.widths == pytest.approx(tuple(h * FROZEN["alpha_log2_h1"] for h in (1, 2, 3)), rel=1e-11)
    assert t.observed == "increasing" == t.predicted
    t = width_table(WeightSpec.quadratic(), [3, 1, 2])
    assert t.heights == (1.0, 2.0, 3.0)
    assert t.observed == "decreasing" == t.predicted


def test_width_table_threads_do_not_change_values():
    a = width_table(WeightSpec.quadratic(), [1, 2, 3, 4])
    b = width_table(WeightSpec.quadratic(), [1, 2, 3, 4], workers=3)
    assert a.widths == b.widths


@pytest.mark.parametrize("spec, h", [(ID, 0.0), (ID, -5.0), (A2, 1.0), (WeightSpec.quadratic(), 2.0)])
def test_profile_invariants(spec, h):
    sol = integrate_profile(spec, h)
    lam = half_width(spec, h)
    # slope consistency with the first integral
    inner = sol.x <= 0.95 * lam
    slopes = np.array([first_integral_slope(spec, h, u) for u in sol.u[inner]])
    assert np.all(np.abs(sol.uprime[inner] - slopes) <= 1e-7 * (1 + sol.uprime[inner] ** 2))
    # width consistency and slab confinement
    assert abs(sol.lambda_estimate - lam) <= 1e-9 * max(1.0, lam)
    assert np.all(sol.x < lam + 1e-9)
    # convexity in x
    xs = np.linspace(0, 0.9 * lam, 401)
    u = sol.evaluate(xs)[0]
    assert np.all(np.diff(u, 2) >= -1e-12)


def test_ode_residual_is_second_order():
    sol = integrate_profile(A2, 1.0)
    errs = []
    for n in (101, 201, 401):
        x = np.linspace(0.0, 1.0, n)
        u, up = sol.evaluate(x)
        dx = x[1] - x[0]
        upp = (u[2:] - 2 * u[1:-1] + u[:-2]) / dx**2
        errs.append(np.max(np.abs(upp - A2.dphi(u[1:-1]) * (1 + up[1:-1] ** 2))))
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders > 1.8)


def test_termination_modes():
    assert integrate_profile(ID, 0.0).termination == "width_converged"
    arc = integrate_profile(WeightSpec.arctan(), 0.0, x_cap=100.0)
    assert arc.termination == "reached_x_cap" and arc.lambda_estimate == math.inf
    assert arc.x_end >= 100.0


def test_reflected_linear_profile_is_concave():
    r = reflect(WeightSpec.linear(1.0))
    sol = integrate_profile(r, 0.0)
    xs = np.linspace(0, 1.5, 301)
    u, up = sol.evaluate(xs)
    assert np.all(np.diff(u, 2) <= 1e-12)
    assert np.all(u <= 0.0) and u[0] == 0.0
    # height-mirrored grim reaper
    np.testing.assert_allclose(u, np.log(np.cos(xs)), atol=1e-8)


def test_mirrored_profile_is_even(grim):
    x, u, up = grim.mirrored()
    np.testing.assert_array_equal(x, -x[::-1])
    np.testing.assert_array_equal(u, u[::-1])
    np.testing.assert_array_equal(up, -up[::-1])


def test_half_width_is_fast():
    t = time.perf_counter()
    half_width(ID, 0.0)
    assert time.perf_counter() - t < 1.0


def test_domain_errors():
    with pytest.raises(DomainError):
        half_width(A2, -1.0)
    with pytest.raises(DomainError):
        integrate_profile(A2, 0.0)
