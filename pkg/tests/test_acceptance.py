"""Acceptance criteria, one test per criterion at its stated tolerance.

Run ``pytest tests/test_acceptance.py -v``; a PASS/FAIL line per criterion
is printed in the terminal summary.
"""

from __future__ import annotations

import io
import math
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.special import i0

from helpers import TWO_PI, random_system, resonant_system
from resonance import cli
from resonance import expr as ex
from resonance.curves import (CurveProblem, average_table, shooting_closure, solve_orbit_at_xi,
                              xi_grid)
from resonance.errors import PreconditionError
from resonance.linear import (Case, adjoint_fundamental, classify,
                              fundamental_matrix, iterate_formula, massera_witness,
                              monodromy_report, simulate_periods, solvability_test,
                              tune_to_resonance, unbounded_direction, RANGE_TOL)
from resonance.pendulum import PendulumProblem, poincare_2d
from resonance.problems import load
from resonance.scalar import (ScalarProblem, find_periodic, iterates, poincare_map,
                              scalar_verdict, unbounded_witness, Verdict)
from resonance.semilinear import SystemProblem, necessary_condition, instability_run
from resonance.smatrix import range_membership

pytestmark = pytest.mark.acceptance

ROOT = Path(__file__).resolve().parents[1]
PROBLEMS = ROOT / "problems"
MU_INTEGRAL = TWO_PI * math.e * i0(1.0)  # ∫ e^{1-cos t} over one period
ADJ_INTEGRAL = TWO_PI * i0(1.0) / math.e  # ∫ e^{cos t - 1} over one period


def atan_scalar(nu: float) -> ScalarProblem:
    return ScalarProblem.from_strings("sin(t)", f"{nu!r} + sin(t)", "(2/pi)*atan(x)",
                                      g_minus=-1, g_plus=1, increasing=True)


@pytest.mark.criterion(1, "classic resonance x'' + x = sin t: Case 1, b = (-pi, 0), witness growth")
def test_criterion_01_classic_resonance():
    start = time.perf_counter()
    out = io.StringIO()
    code = cli.run(["analyze-linear", str(PROBLEMS / "massera_sin.json")], out=out)
    assert code == 0
    assert "Case 1: all solutions unbounded; witness v0 = (1,0); (b,v0) = -3.14159" in out.getvalue()

    sys_ = load(PROBLEMS / "massera_sin.json").linear_system()
    rep = monodromy_report(sys_)
    assert classify(rep).case is Case.ALL_UNBOUNDED
    assert np.allclose(rep.b, [-math.pi, 0.0], atol=1e-6, rtol=0)
    w = massera_witness(rep)
    x0 = np.array([0.3, -0.7])
    xs = simulate_periods(sys_, x0, 20)
    for m in range(1, 21):
        predicted = x0 @ w.v0 + m * (rep.b @ w.v0)
        assert abs(xs[m] @ w.v0 - predicted) <= 1e-6 * m
    assert time.perf_counter() - start < 1.0


@pytest.mark.criterion(2, "trichotomy: sin 2t -> Case 2(ii), 3-D block -> Case 2(iii), tuned rho > 1 -> Case 2(i)")
def test_criterion_02_trichotomy():
    start = time.perf_counter()
    rng = np.random.default_rng(2)

    sin2 = load(PROBLEMS / "massera_sin2t.json").linear_system()
    assert classify(monodromy_report(sin2)).case is Case.ALL_APPROACH_PERIODIC
    for x0 in rng.uniform(-3, 3, size=(4, 2)):
        xs = simulate_periods(sin2, x0, 1)
        assert np.max(np.abs(xs[1] - xs[0])) <= 1e-7

    block = load(PROBLEMS / "block3.json").linear_system()
    assert classify(monodromy_report(block)).case is Case.ALL_BOUNDED
    for x0 in rng.uniform(-2, 2, size=(3, 3)):
        # x1 = x1(0) + 1 - cos t; the oscillator keeps x2^2 + 4 x3^2 fixed
        radius = math.hypot(abs(x0[0]) + 2.0, math.sqrt(x0[1] ** 2 + 4 * x0[2] ** 2),
                            math.sqrt(x0[1] ** 2 / 4 + x0[2] ** 2))
        xs = simulate_periods(block, x0, 40)
        assert np.max(np.linalg.norm(xs, axis=1)) <= radius

    pf = load(PROBLEMS / "tune_growing.json")
    _, family, bracket = pf.tune_family()
    tuned = tune_to_resonance(family, bracket)
    rep = monodromy_report(tuned.system)
    verdict = classify(rep)
    assert verdict.case is Case.PERIODIC_PLUS_UNBOUNDED and verdict.spectral_radius > 1
    lam, v = unbounded_direction(rep)
    homogeneous = tuned.system.with_forcing([ex.const(0.0)] * tuned.system.dimension)
    growth = simulate_periods(homogeneous, v, 10)
    norms = np.linalg.norm(growth, axis=1)
    assert np.allclose(norms[1:] / norms[:-1], abs(lam), rtol=1e-6)
    assert time.perf_counter() - start < 10.0


@pytest.mark.criterion(3, "iterate formula matches direct integration on 50 random systems")
def test_criterion_03_iterate_formula():
    start = time.perf_counter()
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 5))
        sys_ = random_system(rng, n)
        rep = monodromy_report(sys_)
        x0 = rng.uniform(-1, 1, n)
        formula = iterate_formula(rep, x0, 10).x
        direct = simulate_periods(sys_, x0, 10)[-1]
        worst = max(worst, float(np.max(np.abs(formula - direct)) / max(1.0, np.max(np.abs(direct)))))
    assert worst <= 1e-6
    assert time.perf_counter() - start < 30.0


@pytest.mark.criterion(4, "adjoint duality on 25 tuned resonant systems")
def test_criterion_04_duality():
    rng = np.random.default_rng(4)
    verdicts = []
    for i in range(25):
        n = int(rng.integers(1, 5))
        sys_, _ = resonant_system(rng, n, solvable=bool(i % 2))
        for t in (0.37 * sys_.period, sys_.period):
            x = fundamental_matrix(sys_, t, 1e-12)
            z = adjoint_fundamental(sys_, t, 1e-12)
            assert np.max(np.abs(z.T @ x - np.eye(n))) <= 1e-9
        xp = fundamental_matrix(sys_, sys_.period)
        zp = adjoint_fundamental(sys_, sys_.period)
        lx = np.linalg.eigvals(xp)
        lz = np.linalg.eigvals(zp)
        for mu in 1.0 / lx:
            assert np.min(np.abs(lz - mu)) <= 1e-7 * max(1.0, abs(mu))
        rep = monodromy_report(sys_)
        test = range_membership(rep.defect_matrix, rep.b, RANGE_TOL, rep.rank_tol, rep.singular_scale)
        solv = solvability_test(sys_)
        assert solv.solvable == test.in_range
        verdicts.append(solv.solvable)
    assert any(verdicts) and not all(verdicts)


@pytest.mark.criterion(5, "arctangent scalar sweep: fixed points for |nu| < 1, none for |nu| >= 1, margin at nu = 1.2")
def test_criterion_05_arctangent_sweep():
    start = time.perf_counter()
    for nu in (-0.9, -0.5, 0.0, 0.5, 0.9):
        prob = atan_scalar(nu)
        assert scalar_verdict(prob).verdict is Verdict.UNIQUE_ATTRACTING
        orbit = find_periodic(prob)
        assert orbit.closure <= 1e-9
        for shift in (5.0, -5.0):
            d = np.abs(iterates(prob, orbit.x0 + shift, 20) - orbit.x0)
            above = d[d > 1e-9]
            assert np.all(np.diff(above) < 0)
            assert d[-1] < 0.3 * d[0]
    for nu in (1.0, 1.2, -1.2):
        prob = atan_scalar(nu)
        assert scalar_verdict(prob).verdict is Verdict.ALL_UNBOUNDED
        with pytest.raises(PreconditionError):
            find_periodic(prob)
        shifts = [poincare_map(prob, x0) - x0 for x0 in np.linspace(-50, 50, 11)]
        assert all(s > 0 for s in shifts) or all(s < 0 for s in shifts)
    alpha = 0.2 * MU_INTEGRAL
    assert alpha > 4.32
    w = unbounded_witness(atan_scalar(1.2), 0.0, 10)
    for m in range(1, 11):
        assert w.iterates[m] - w.iterates[0] > m * 4.32
    assert time.perf_counter() - start < 20.0


@pytest.mark.criterion(6, "curve of averages: continuous curve, nu in (-1, 1), |nu(+-40)| >= 0.97, shooting agreement, N-doubling")
def test_criterion_06_curve_of_averages():
    start = time.perf_counter()
    problem = CurveProblem.from_scalar(atan_scalar(0.0))
    table = average_table(problem, xi_grid(-40.0, 40.0, 0.5))
    curve = table.curve
    problems = []
    if curve.failures:
        problems.append(f"failed points: {curve.failures}")
    if not np.all((table.nu > -1) & (table.nu < 1)):
        problems.append("a value of nu leaves (-1, 1)")
    if not np.all(curve.gaps() < 0.5):
        problems.append(f"adjacent orbits differ by up to {curve.gaps().max():.3g}")
    if not np.all(np.diff(table.nu) > 0):
        problems.append("nu is not increasing in xi")
    lo, hi = curve.at(-40.0).mu, curve.at(40.0).mu
    if not (abs(lo) >= 0.97 and abs(hi) >= 0.97):
        problems.append(f"|nu(-40)| = {abs(lo):.6f}, |nu(40)| = {abs(hi):.6f}, expected >= 0.97")
    for xi in (-10.0, 0.0, 10.0):
        orbit = curve.at(xi)
        shoot = find_periodic(atan_scalar(orbit.mu))
        if abs(shoot.x0 - (orbit.xi + orbit.nodes[0])) > 1e-6 or abs(shoot.average - xi) > 1e-6:
            problems.append(f"shooting disagrees at xi = {xi}")
        if shooting_closure(problem, orbit) > 1e-7:
            problems.append(f"collocation orbit does not close at xi = {xi}")
    for xi in (-40.0, 0.0, 40.0):
        a = solve_orbit_at_xi(problem, xi, n=64, adapt=False)
        b = solve_orbit_at_xi(problem, xi, n=128, adapt=False)
        drift = max(abs(a.mu - b.mu), float(np.max(np.abs(a.nodes - b.nodes[::2]))))
        if drift >= 1e-9:
            problems.append(f"N-doubling drift {drift:.3g} at xi = {xi}")
    elapsed = time.perf_counter() - start
    if elapsed >= 60.0:
        problems.append(f"runtime {elapsed:.1f} s")
    assert not problems, "; ".join(problems)


@pytest.mark.criterion(7, "closed-form curve g(x) = x, e = sin t: mu = xi, X = (sin t - cos t)/2")
def test_criterion_07_linear_curve():
    problem = CurveProblem.first_order("x", "sin(t)")
    for xi in np.linspace(-5, 5, 21):
        orbit = solve_orbit_at_xi(problem, xi)
        t = orbit.times
        assert abs(orbit.mu - xi) <= 1e-9
        assert np.max(np.abs(orbit.nodes - (np.sin(t) - np.cos(t)) / 2)) <= 1e-9
        s = np.linspace(0, TWO_PI, 37)
        assert np.max(np.abs(orbit(s) - (np.sin(s) - np.cos(s)) / 2)) <= 1e-9


@pytest.mark.criterion(8, "pendulum instability: V = x' + lambda x gains >= pi per period; x'' + x' = 1 + sin t gains 2 pi")
def test_criterion_08_pendulum():
    prob = PendulumProblem.from_strings(1, "(2/pi)*atan(x)", "sin(t)", 1.5, bound=1, g_minus=-1, g_plus=1)
    for start in ((0.0, 0.0), (3.0, -2.0), (-10.0, 4.0)):
        run = poincare_2d(prob, start, 20)
        assert run.direction == 1 and run.consistent
        assert np.all(run.gains >= math.pi - 1e-6)
    flat = PendulumProblem.from_strings(1, "0", "sin(t)", 1.0, bound=1, g_minus=0, g_plus=0)
    run = poincare_2d(flat, (0.5, -1.0), 10)
    assert np.max(np.abs(run.gains - TWO_PI)) <= 1e-8


@pytest.mark.criterion(9, "semilinear pair: interval endpoints from quadrature, V increases for nu1 = 2")
def test_criterion_09_semilinear():
    def pair(nu1):
        return SystemProblem.from_strings(
            [["sin(t)", "0"], ["0", "-sin(t)"]],
            ["(2/pi)*atan(x1 + x2)", "(2/pi)*atan(x1 - x2)"], [-1, -1], [1, 1],
            g=["nu1 + sin(t)", "nu2"], params={"nu1": nu1, "nu2": 0.0})

    prob = pair(2.0)
    cond = necessary_condition(prob)
    i1, i2 = cond.z_integrals
    assert abs(i1 - 21.6245) / 21.6245 <= 1e-3 and abs(i2 - 2.9265) / 2.9265 <= 1e-3
    assert abs(i1 - MU_INTEGRAL) <= 1e-8 and abs(i2 - ADJ_INTEGRAL) <= 1e-8
    assert abs(cond.upper - (i1 + i2)) <= 1e-9 and abs(cond.lower + i1 + i2) <= 1e-9
    assert not cond.satisfied and abs(cond.value - 2 * i1) <= 1e-7
    rng = np.random.default_rng(9)
    for x0 in rng.uniform(-5, 5, size=(3, 2)):
        run = instability_run(prob, x0, 20)
        assert run.consistent and np.all(np.diff(run.V) > 0)


@pytest.mark.criterion(10, "property suites green, full suite under 5 minutes")
def test_criterion_10_properties():
    start = time.perf_counter()
    proc = subprocess.run(
        [sys.executable, "-m", "pytest", "-q", "-m", "property", "-p", "no:cacheprovider", str(ROOT / "tests")],
        capture_output=True, text=True, cwd=ROOT)
    elapsed = time.perf_counter() - start
    assert proc.returncode == 0, proc.stdout[-3000:]
    assert " passed" in proc.stdout
    assert elapsed < 300.0
