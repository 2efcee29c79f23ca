"""Damped pendulum-like equations ``x'' + λ x' + g(x) = μ + e(t)``.

``e`` has zero mean over the period ``p``.  When ``g`` is bounded and
``|g'| < λ²/4 + ω²`` (``ω = 2π/p``), periodic solutions exist exactly for
``g(-∞) < μ < g(∞)``.  Outside that interval ``V = x' + λx`` grows by more
than ``(μ - g(∞)) p`` every period (or the mirror statement below).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.optimize

from . import expr as ex
from .errors import ConvergenceError, HypothesisError, ProblemError
from .ode import Trajectory, integrate, periodic_quadrature
from .scalar import ORBIT_TOL, limit_samples

__all__ = [
    "PendulumProblem",
    "SlopeCheck",
    "PendulumVerdict",
    "PoincareRun",
    "PendulumOrbit",
    "verify_slope_bound",
    "slope_check",
    "pendulum_verdict",
    "poincare_2d",
    "find_fixed_point_2d",
]


@dataclass(frozen=True, eq=False)
class PendulumProblem:
    lam: float
    g: ex.Expression
    e: ex.Expression
    mu: float
    period: float = 2 * math.pi
    bound: float | None = None
    g_minus: float | None = None
    g_plus: float | None = None

    def __post_init__(self):
        if not self.lam > 0:
            raise ProblemError("damping lambda must be positive")
        if ex.free_variables(self.g) - {"x"} or ex.free_variables(self.e) - {"t"}:
            raise ProblemError("g must depend on x only and e on t only")
        mean_e = periodic_quadrature(ex.compile_array(self.e, ["t"]), self.period).value
        if abs(mean_e) > 1e-9:
            raise ProblemError(f"e(t) must have zero mean over a period, ∫e = {mean_e:.6g}")
        if (self.g_minus is None) != (self.g_plus is None):
            raise ProblemError("declare both limits of g or neither")
        if self.bound is not None:
            gs = self.g_array(limit_samples())
            if np.max(np.abs(gs)) > self.bound:
                raise ProblemError(f"|g| exceeds the declared bound {self.bound}")

    @classmethod
    def from_strings(cls, lam, g: str, e: str, mu, period: float = 2 * math.pi, bound=None,
                     g_minus=None, g_plus=None, params: dict | None = None) -> "PendulumProblem":
        params = dict(params or {})
        names = list(params)

        def build(src, v):
            tree = ex.parse(str(src), [v] + names)
            return ex.substitute(tree, params) if params else tree

        return cls(float(lam), build(g, "x"), build(e, "t"), float(mu), float(period),
                   None if bound is None else float(bound),
                   None if g_minus is None else float(g_minus),
                   None if g_plus is None else float(g_plus))

    @property
    def omega(self) -> float:
        return 2 * math.pi / self.period

    @cached_property
    def g_array(self) -> Callable:
        return ex.compile_array(self.g, ["x"])

    @property
    def limits_respected(self) -> bool:
        """``g(-∞) < g(x) < g(∞)`` on 1000 samples."""
        if self.g_minus is None:
            return False
        gs = self.g_array(limit_samples())
        return bool(np.all(gs > self.g_minus) and np.all(gs < self.g_plus))

    def with_mu(self, mu: float) -> "PendulumProblem":
        return PendulumProblem(self.lam, self.g, self.e, float(mu), self.period, self.bound,
                               self.g_minus, self.g_plus)

    @cached_property
    def field(self) -> Callable[[float, np.ndarray], np.ndarray]:
        force = ex.compile_scalar(ex.sub(self.e, self.g), ["t", "x"])
        lam, mu = self.lam, self.mu

        def rhs(t, y):
            return np.array([y[1], mu + force(t, y[0]) - lam * y[1]])

        return rhs


@dataclass(frozen=True)
class SlopeCheck:
    sup_estimate: float
    argmax: float
    bound: float
    holds: bool
    note: str = "sampled, not proven"


def verify_slope_bound(problem: PendulumProblem, points: int = 10_000) -> SlopeCheck:
    """Estimate ``sup |g'|`` and compare with ``λ²/4 + ω²``.

    The estimate is the maximum over a symmetric log-spaced grid plus the
    zeros of ``g''`` located by bracketing; it is a lower bound for the
    supremum, so only a failure is certain.
    """
    return slope_check(problem.g, problem.lam, problem.period, points)


def slope_check(g: ex.Expression, lam: float, period: float, points: int = 10_000) -> SlopeCheck:
    """:func:`verify_slope_bound` for a bare nonlinearity ``g(x)``."""
    dg = ex.differentiate(g, "x")
    d2g = ex.differentiate(dg, "x")
    dg_arr = ex.compile_array(dg, ["x"])
    half = np.logspace(-6, 6, points // 2)
    xs = np.concatenate([-half[::-1], [0.0], half])
    vals = np.abs(dg_arr(xs))
    best = int(np.argmax(vals))
    sup, arg = float(vals[best]), float(xs[best])
    if not isinstance(d2g, ex.Const):
        d2 = ex.compile_array(d2g, ["x"])
        d2s = d2(xs)
        d2_scalar = ex.compile_scalar(d2g, ["x"])
        dg_scalar = ex.compile_scalar(dg, ["x"])
        for i in np.nonzero(np.sign(d2s[:-1]) * np.sign(d2s[1:]) < 0)[0]:
            root = scipy.optimize.brentq(d2_scalar, xs[i], xs[i + 1], xtol=1e-14)
            v = abs(dg_scalar(root))
            if v > sup:
                sup, arg = v, root
    bound = lam**2 / 4 + (2 * math.pi / period) ** 2
    return SlopeCheck(sup, arg, bound, sup < bound - 1e-9)


@dataclass(frozen=True)
class PendulumVerdict:
    exists: bool
    lower: float
    upper: float
    mu: float
    check: SlopeCheck

    def describe(self) -> str:
        if self.exists:
            return f"periodic solution exists: {self.lower:.6g} < mu = {self.mu:.6g} < {self.upper:.6g}"
        return (f"no periodic solution: mu = {self.mu:.6g} outside ({self.lower:.6g}, {self.upper:.6g}); "
                "all solutions unbounded as t -> ±inf")


def pendulum_verdict(problem: PendulumProblem) -> PendulumVerdict:
    check = verify_slope_bound(problem)
    if not check.holds:
        raise HypothesisError(
            f"sup|g'| >= {check.sup_estimate:.6g} is not below lambda^2/4 + omega^2 = {check.bound:.6g}"
        )
    if problem.g_minus is None:
        raise HypothesisError("limits g(±inf) are not declared")
    if problem.bound is None:
        raise HypothesisError("no bound M on |g| is declared")
    if not problem.limits_respected:
        raise HypothesisError("g does not stay strictly between its limits")
    exists = problem.g_minus < problem.mu < problem.g_plus
    return PendulumVerdict(exists, problem.g_minus, problem.g_plus, problem.mu, check)


@dataclass(frozen=True)
class PoincareRun:
    states: np.ndarray  # (x(kp), x'(kp)), k = 0..m
    V: np.ndarray  # x' + λ x
    direction: int  # +1: μ ≥ g(∞), -1: μ ≤ g(-∞), 0: no monotonicity claim
    consistent: bool

    @property
    def gains(self) -> np.ndarray:
        return np.diff(self.V)


def poincare_2d(problem: PendulumProblem, start, m: int, tol: float = ORBIT_TOL,
                slack: float = 1e-9) -> PoincareRun:
    """Iterate the period map of ``(x, x')`` and track ``V = x' + λx``."""
    y = np.asarray(start, dtype=float)
    states = [y]
    p = problem.period
    for k in range(m):
        y = integrate(problem.field, k * p, y, (k + 1) * p, tol, tol, dense=False).y[-1]
        states.append(y)
    states = np.array(states)
    V = states[:, 1] + problem.lam * states[:, 0]
    direction = 0
    if problem.g_plus is not None and problem.mu >= problem.g_plus:
        direction = 1
    elif problem.g_minus is not None and problem.mu <= problem.g_minus:
        direction = -1
    consistent = True
    if direction and m > 0:
        inc = direction * np.diff(V)
        consistent = bool(np.all(inc > -slack * np.maximum(1.0, np.abs(V[1:]))) and np.all(inc > 0))
    return PoincareRun(states, V, direction, consistent)


@dataclass(frozen=True, eq=False)
class PendulumOrbit:
    x0: float
    v0: float
    closure: float
    average: float
    trajectory: Trajectory
    iterations: int

    def __call__(self, t):
        return self.trajectory(t)[..., 0]


def _period_map(problem: PendulumProblem, z: np.ndarray, tol: float) -> np.ndarray:
    return integrate(problem.field, 0.0, z, problem.period, tol, tol, dense=False).y[-1]


def find_fixed_point_2d(problem: PendulumProblem, guess=(0.0, 0.0), tol: float = ORBIT_TOL,
                        closure_tol: float = 1e-11, max_iter: int = 50,
                        fd_step: float = 1e-6) -> PendulumOrbit:
    """Newton's method on ``P(z) - z`` with a finite-difference Jacobian.

    Falls back to halved steps whenever a full step does not reduce the
    residual.
    """
    z = np.asarray(guess, dtype=float)
    r = _period_map(problem, z, tol) - z
    norm = float(np.linalg.norm(r))
    it = 0
    while norm > closure_tol and it < max_iter:
        it += 1
        jac = np.empty((2, 2))
        for j in range(2):
            dz = np.zeros(2)
            dz[j] = fd_step * max(1.0, abs(z[j]))
            jac[:, j] = ((_period_map(problem, z + dz, tol) - (z + dz)) - r) / dz[j]
        step = np.linalg.solve(jac, -r)
        damp = 1.0
        while True:
            trial = z + damp * step
            r_trial = _period_map(problem, trial, tol) - trial
            n_trial = float(np.linalg.norm(r_trial))
            if n_trial < norm or damp < 1e-6:
                break
            damp *= 0.5
        if n_trial >= norm and damp < 1e-6:
            break
        z, r, norm = trial, r_trial, n_trial
    if norm > 1e-8:
        raise ConvergenceError(f"Newton on the period map stalled at residual {norm:.3g}", norm)

    lam, mu = problem.lam, problem.mu
    force = ex.compile_scalar(ex.sub(problem.e, problem.g), ["t", "x"])

    def rhs(t, y):
        return np.array([y[1], mu + force(t, y[0]) - lam * y[1], y[0]])

    tr = integrate(rhs, 0.0, [z[0], z[1], 0.0], problem.period, tol, tol)
    closure = float(np.linalg.norm(tr.y[-1, :2] - z))
    return PendulumOrbit(float(z[0]), float(z[1]), closure, float(tr.y[-1, 2]) / problem.period, tr, it)
