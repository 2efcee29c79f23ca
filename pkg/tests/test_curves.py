import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from resonance.curves import (CurveProblem, differentiation_matrices, shooting_closure, solve_orbit_at_xi,
                              trace_curve, xi_grid)
from resonance.errors import HypothesisError, ProblemError
from resonance.pendulum import PendulumProblem, find_fixed_point_2d
from resonance.scalar import ScalarProblem

ATAN = "(2/pi)*atan(x)"


def flat_problem():
    return CurveProblem.first_order(ATAN, "sin(t) + 0.5*cos(2*t)")


def example_curve():
    return CurveProblem.from_scalar(ScalarProblem.from_strings("sin(t)", "sin(t)", ATAN))


def test_differentiation_matrices_on_trigonometric_polynomial():
    d1, d2 = differentiation_matrices(16, 2 * math.pi)
    t = np.arange(16) * 2 * math.pi / 16
    f = np.sin(3 * t) + np.cos(t)
    assert np.allclose(d1 @ f, 3 * np.cos(3 * t) - np.sin(t), atol=1e-12)
    assert np.allclose(d2 @ f, -9 * np.sin(3 * t) - np.cos(t), atol=1e-11)
    with pytest.raises(ValueError):
        differentiation_matrices(7, 1.0)


def test_differentiation_matrices_scale_with_period():
    d1, _ = differentiation_matrices(8, 4.0)
    t = np.arange(8) * 0.5
    assert np.allclose(d1 @ np.sin(math.pi * t / 2), math.pi / 2 * np.cos(math.pi * t / 2), atol=1e-12)


def test_constructor_validation():
    with pytest.raises(ProblemError):
        CurveProblem.first_order(ATAN, "1 + sin(t)")
    with pytest.raises(HypothesisError):
        CurveProblem.first_order(ATAN, "sin(t)", a="1")
    with pytest.raises(ProblemError):
        CurveProblem.second_order(ATAN, "sin(t)", lam=0.0)


def test_from_scalar_splits_off_the_mean():
    prob = CurveProblem.from_scalar(ScalarProblem.from_strings("0", "0.3 + sin(t)", ATAN))
    assert prob.a is None
    assert np.allclose(prob.forcing(np.array([0.0, 1.0])), [0.0, math.sin(1.0)])


def test_orbit_has_requested_average_and_closes():
    orbit = solve_orbit_at_xi(example_curve(), 2.5)
    assert abs(orbit.mean) < 1e-12
    assert orbit.residual <= 1e-10
    assert shooting_closure(example_curve(), orbit) < 1e-8


def test_interpolant_reproduces_nodes():
    orbit = solve_orbit_at_xi(example_curve(), -1.0)
    assert np.allclose(orbit(orbit.times), orbit.nodes, atol=1e-12)
    assert np.allclose(orbit.resample(orbit.n * 2)[::2], orbit.nodes, atol=1e-12)


def test_second_order_curve_matches_shooting_fixed_point():
    pend = PendulumProblem.from_strings(1, ATAN, "sin(t)", 0.5)
    fixed = find_fixed_point_2d(pend)
    curve = CurveProblem.from_pendulum(pend)
    orbit = solve_orbit_at_xi(curve, fixed.average)
    assert orbit.mu == pytest.approx(0.5, abs=1e-9)
    assert orbit.x(0.0) == pytest.approx(fixed.x0, abs=1e-8)


def test_second_order_needs_slope_hypothesis():
    steep = CurveProblem.second_order("3*atan(x)", "sin(t)", lam=1.0)
    with pytest.raises(HypothesisError):
        solve_orbit_at_xi(steep, 0.0)


def test_trace_small_grid_is_monotone_and_continuous():
    curve = trace_curve(example_curve(), xi_grid(-3, 3, 1.0))
    assert not curve.failures
    assert np.all(np.diff(curve.mu) > 0)
    assert np.all(curve.gaps() < 0.5)
    assert curve.at(0.0).xi == 0.0
    with pytest.raises(KeyError):
        curve.at(0.3)
    assert len(curve.rows()) == len(curve.orbits)


def test_trace_rejects_unsorted_grid():
    with pytest.raises(ValueError):
        trace_curve(example_curve(), [0.0, -1.0])


def test_xi_grid_endpoints():
    g = xi_grid(-40, 40, 0.5)
    assert len(g) == 161 and g[0] == -40 and g[-1] == 40 and g[80] == 0.0
    with pytest.raises(ValueError):
        xi_grid(1, 0, 0.5)


@pytest.mark.property
@settings(max_examples=12, deadline=None)
@given(st.floats(-20, 20))
def test_energy_and_wirtinger_bounds(xi):
    # a ≡ 0: ‖X'‖ ≤ ‖e‖ from the energy identity, then ‖X‖ ≤ (p/2π)‖X'‖
    prob = flat_problem()
    orbit = solve_orbit_at_xi(prob, xi)
    e_norm = orbit.l2(prob.forcing(orbit.times))
    dx = orbit.l2(orbit.derivative_nodes)
    assert dx <= e_norm * (1 + 1e-9)
    assert orbit.l2() <= prob.period / (2 * math.pi) * dx * (1 + 1e-9)


@pytest.mark.property
@settings(max_examples=12, deadline=None)
@given(st.floats(-20, 20))
def test_mean_balance_for_constant_coefficient(xi):
    # a ≡ 0: averaging the equation gives μ = mean of g(x)
    prob = flat_problem()
    orbit = solve_orbit_at_xi(prob, xi)
    assert orbit.mu == pytest.approx(float(np.mean(prob.g_values(orbit.x(orbit.times)))), abs=1e-10)


@pytest.mark.property
@settings(max_examples=12, deadline=None)
@given(st.floats(-15, 15), st.floats(0.1, 6.2))
def test_spectral_derivative_matches_finite_difference(xi, t):
    orbit = solve_orbit_at_xi(example_curve(), xi)
    h = 1e-5
    fd = (orbit(t + h) - orbit(t - h)) / (2 * h)
    a, b = orbit.coefficients
    k = np.arange(a.size)
    exact = float(np.sum(k * (b * np.cos(k * t) - a * np.sin(k * t))))
    assert exact == pytest.approx(float(fd), abs=1e-6 * max(1.0, orbit.sup_norm))


@pytest.mark.property
@settings(max_examples=8, deadline=None)
@given(st.integers(0, 10 ** 6), st.floats(-10, 10))
def test_random_start_converges_to_same_orbit(seed, xi):
    prob = example_curve()
    ref = solve_orbit_at_xi(prob, xi)
    rng = np.random.default_rng(seed)
    guess = (rng.normal(scale=2.0, size=64), float(rng.uniform(-1, 1)))
    other = solve_orbit_at_xi(prob, xi, guess=guess)
    assert other.mu == pytest.approx(ref.mu, abs=1e-9)
