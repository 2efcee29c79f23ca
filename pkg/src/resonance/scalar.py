"""First-order scalar equations ``x' + a(t) x + g(x) = f(t)`` at resonance.

Resonance means ``∫₀ᵖ a = 0``, so the integrating factor
``μ(t) = exp(∫₀ᵗ a)`` is periodic.  With bounded ``g`` having limits
``g(-∞) < g(x) < g(∞)``, a periodic solution exists exactly when the
Landesman-Lazer condition

    g(-∞) ∫μ  <  ∫μ f  <  g(∞) ∫μ

holds; if ``g`` is also increasing the periodic solution is unique and
attracting, and if the condition fails every solution drifts off to
infinity by at least ``α`` per period.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.optimize

from . import expr as ex
from .errors import HypothesisError, NumericalError, PreconditionError, ProblemError
from .ode import Trajectory, integrate, periodic_antiderivative, periodic_quadrature

__all__ = [
    "ORBIT_TOL",
    "NotResonantError",
    "ScalarProblem",
    "IntegratingFactor",
    "LandesmanLazer",
    "Verdict",
    "ScalarVerdict",
    "PeriodicOrbit",
    "UnboundedWitness",
    "limit_samples",
    "integrating_factor",
    "landesman_lazer_interval",
    "scalar_verdict",
    "poincare_map",
    "trajectory",
    "iterates",
    "find_periodic",
    "unbounded_witness",
]

# integration tolerance for Poincaré maps and periodic orbits
ORBIT_TOL = 1e-12


class NotResonantError(HypothesisError):
    """``∫a ≠ 0``: the linear part is not at resonance."""


def limit_samples() -> np.ndarray:
    """1000 sample points in ``[-1e6, 1e6]``, dense near zero."""
    r = np.logspace(-3, 6, 500)
    return np.concatenate([-r[::-1], r])


@dataclass(frozen=True, eq=False)
class ScalarProblem:
    """``x' + a(t) x + g(x) = f(t)`` with period ``p``.

    ``g_minus``/``g_plus`` are the declared limits of ``g`` at ``∓∞``; they
    may be omitted for linear problems.  ``increasing`` declares ``g' > 0``,
    which is spot-checked on samples.
    """

    a: ex.Expression
    f: ex.Expression
    g: ex.Expression
    period: float = 2 * math.pi
    g_minus: float | None = None
    g_plus: float | None = None
    increasing: bool = False

    def __post_init__(self):
        for name, e, allowed in (("a", self.a, {"t"}), ("f", self.f, {"t"}), ("g", self.g, {"x"})):
            extra = ex.free_variables(e) - allowed
            if extra:
                raise ProblemError(f"{name} uses undeclared variables {sorted(extra)}")
        mean_a = periodic_quadrature(ex.compile_array(self.a, ["t"]), self.period).value
        if abs(mean_a) > 1e-9:
            side = "t -> +inf" if mean_a > 0 else "t -> -inf"
            raise NotResonantError(
                f"∫a = {mean_a:.6g} ≠ 0: not at resonance; for linear g the unique periodic "
                f"solution attracts all solutions as {side}"
            )
        if (self.g_minus is None) != (self.g_plus is None):
            raise ProblemError("declare both limits of g or neither")
        if self.g_minus is not None:
            if not self.g_minus < self.g_plus:
                raise ProblemError("g(-inf) must be below g(+inf)")
            xs = limit_samples()
            gs = self.g_array(xs)
            if not (np.all(gs > self.g_minus) and np.all(gs < self.g_plus)):
                bad = xs[np.argmax((gs <= self.g_minus) | (gs >= self.g_plus))]
                raise ProblemError(f"g leaves ({self.g_minus}, {self.g_plus}) at x={bad:.6g}")
            far = self.g_array(np.array([-1e6, 1e6]))
            if abs(far[0] - self.g_minus) > 0.01 or abs(far[1] - self.g_plus) > 0.01:
                warnings.warn(
                    f"g(±1e6) = ({far[0]:.6g}, {far[1]:.6g}) is far from the declared limits "
                    f"({self.g_minus}, {self.g_plus})",
                    stacklevel=3,
                )
        if self.increasing and not self.sampled_increasing:
            raise ProblemError("g is declared increasing but g' <= 0 at a sample point")

    @classmethod
    def from_strings(cls, a: str, f: str, g: str, period: float = 2 * math.pi,
                     g_minus=None, g_plus=None, increasing: bool = False,
                     params: dict | None = None) -> "ScalarProblem":
        params = dict(params or {})
        names = list(params)

        def build(src, var):
            tree = ex.parse(str(src), [var] + names)
            return ex.substitute(tree, params) if params else tree

        return cls(build(a, "t"), build(f, "t"), build(g, "x"), float(period),
                   None if g_minus is None else float(g_minus),
                   None if g_plus is None else float(g_plus), increasing)

    @property
    def has_limits(self) -> bool:
        return self.g_minus is not None

    @cached_property
    def g_array(self) -> Callable:
        return ex.compile_array(self.g, ["x"])

    @cached_property
    def dg(self) -> ex.Expression:
        return ex.differentiate(self.g, "x")

    @cached_property
    def sampled_increasing(self) -> bool:
        return bool(np.all(ex.compile_array(self.dg, ["x"])(limit_samples()) > 0))

    @property
    def monotone(self) -> bool:
        """Declared increasing and confirmed on 1000 samples of ``g'``."""
        return self.increasing and self.sampled_increasing

    @cached_property
    def rhs_expression(self) -> ex.Expression:
        return ex.sub(ex.sub(self.f, ex.mul(self.a, ex.var("x"))), self.g)

    @cached_property
    def field(self) -> Callable[[float, np.ndarray], np.ndarray]:
        fn = ex.compile_scalar(self.rhs_expression, ["t", "x"])

        def rhs(t, y):
            return np.array([fn(t, y[0])])

        return rhs

    @cached_property
    def mu(self) -> "IntegratingFactor":
        return integrating_factor(self)

    def with_f(self, f: ex.Expression) -> "ScalarProblem":
        return ScalarProblem(self.a, f, self.g, self.period, self.g_minus, self.g_plus, self.increasing)


class IntegratingFactor:
    """``μ(t) = exp(∫₀ᵗ a)`` evaluated from the Fourier series of ``a``."""

    def __init__(self, problem: ScalarProblem):
        self.problem = problem
        self._A = periodic_antiderivative(ex.compile_array(problem.a, ["t"]), problem.period)
        end = float(np.exp(self._A(problem.period)))
        if abs(end - 1.0) > 1e-9:
            raise NumericalError(f"integrating factor is not periodic: μ(p) = {end!r}")
        self.total = periodic_quadrature(self, problem.period).value

    def __call__(self, t):
        return np.exp(self._A(t))

    def weighted_integral(self, h: Callable) -> float:
        """``∫₀ᵖ μ(t) h(t) dt``."""
        return periodic_quadrature(lambda t: self(t) * h(t), self.problem.period).value

    def linear_solution(self, c: float) -> Callable:
        """Solution of ``x' + a x = f`` (``g`` ignored) with ``x(0) = c``.

        ``x(t) = (c + ∫₀ᵗ μ f) / μ(t)``.
        """
        f = ex.compile_array(self.problem.f, ["t"])
        F = periodic_antiderivative(lambda t: self(t) * f(t), self.problem.period)

        def x(t):
            return (c + F(t)) / self(t)

        return x


def integrating_factor(problem: ScalarProblem) -> IntegratingFactor:
    return IntegratingFactor(problem)


@dataclass(frozen=True)
class LandesmanLazer:
    lower: float
    upper: float
    value: float
    mu_integral: float
    satisfied: bool
    tol: float


def landesman_lazer_interval(problem: ScalarProblem, rel_tol: float = 1e-10) -> LandesmanLazer:
    """``(g(-∞)∫μ, g(∞)∫μ)`` and ``∫μf``; satisfied when strictly inside."""
    if not problem.has_limits:
        raise HypothesisError("limits g(±inf) are not declared")
    mu = problem.mu
    f = ex.compile_array(problem.f, ["t"])
    value = mu.weighted_integral(f)
    lower = problem.g_minus * mu.total
    upper = problem.g_plus * mu.total
    tol = rel_tol * max(1.0, abs(lower), abs(upper), abs(value))
    inside = lower + tol < value < upper - tol
    return LandesmanLazer(lower, upper, value, mu.total, inside, tol)


class Verdict(str, Enum):
    UNIQUE_ATTRACTING = "UniqueAttractingPeriodic"
    EXISTS_ONLY = "PeriodicExistsOnly"
    ALL_UNBOUNDED = "AllUnbounded"


@dataclass(frozen=True)
class ScalarVerdict:
    verdict: Verdict
    interval: LandesmanLazer
    alpha: float | None = None
    direction: int = 0  # +1: ∫μf ≥ g(∞)∫μ, -1: ∫μf ≤ g(-∞)∫μ
    boundary: bool = False

    def describe(self) -> str:
        iv = self.interval
        head = f"{self.verdict.value}; interval ({iv.lower:.6g}, {iv.upper:.6g}); value {iv.value:.6g}"
        if self.verdict is Verdict.ALL_UNBOUNDED:
            side = "above" if self.direction > 0 else "below"
            head += f"; margin alpha {self.alpha:.6g} ({side} the interval"
            head += ", boundary case)" if self.boundary else ")"
        return head


def scalar_verdict(problem: ScalarProblem) -> ScalarVerdict:
    """Existence, uniqueness/attraction or blow-up from the interval test.

    Values on the boundary of the interval count as blow-up (``α = 0``).
    """
    iv = landesman_lazer_interval(problem)
    if iv.satisfied:
        kind = Verdict.UNIQUE_ATTRACTING if problem.monotone else Verdict.EXISTS_ONLY
        return ScalarVerdict(kind, iv)
    mid = 0.5 * (iv.lower + iv.upper)
    if iv.value >= mid:
        alpha, direction = iv.value - iv.upper, 1
    else:
        alpha, direction = iv.lower - iv.value, -1
    boundary = abs(alpha) <= iv.tol
    return ScalarVerdict(Verdict.ALL_UNBOUNDED, iv, max(alpha, 0.0), direction, boundary)


def poincare_map(problem: ScalarProblem, x0: float, tol: float = ORBIT_TOL) -> float:
    """``x(p)`` for the solution with ``x(0) = x0``."""
    tr = integrate(problem.field, 0.0, [float(x0)], problem.period, tol, tol, dense=False)
    return float(tr.y[-1, 0])


def trajectory(problem: ScalarProblem, x0: float, t_end: float | None = None,
               tol: float = ORBIT_TOL) -> Trajectory:
    t_end = problem.period if t_end is None else t_end
    return integrate(problem.field, 0.0, [float(x0)], t_end, tol, tol)


def iterates(problem: ScalarProblem, x0: float, m: int, tol: float = ORBIT_TOL) -> np.ndarray:
    """``x(kp)`` for ``k = 0..m``."""
    p = problem.period
    out = [float(x0)]
    y = np.array([float(x0)])
    for k in range(m):
        y = integrate(problem.field, k * p, y, (k + 1) * p, tol, tol, dense=False).y[-1]
        if not np.isfinite(y[0]):
            raise NumericalError(f"iterate {k + 1} is not finite")
        out.append(float(y[0]))
    return np.array(out)


@dataclass(frozen=True, eq=False)
class PeriodicOrbit:
    x0: float
    closure: float
    average: float
    trajectory: Trajectory
    trapping: float
    period: float

    def __call__(self, t):
        y = self.trajectory(t)
        return y[..., 0]


def _orbit(problem: ScalarProblem, x0: float, trapping: float, tol: float) -> PeriodicOrbit:
    fn = ex.compile_scalar(problem.rhs_expression, ["t", "x"])

    def rhs(t, y):
        return np.array([fn(t, y[0]), y[0]])

    tr = integrate(rhs, 0.0, [x0, 0.0], problem.period, tol, tol)
    closure = abs(float(tr.y[-1, 0]) - x0)
    return PeriodicOrbit(x0, closure, float(tr.y[-1, 1]) / problem.period, tr, trapping, problem.period)


def find_periodic(problem: ScalarProblem, tol: float = ORBIT_TOL, xtol: float = 1e-12,
                  max_radius: float = 1e6) -> PeriodicOrbit:
    """Fixed point of the Poincaré map inside a trapping interval ``[-A, A]``.

    ``A`` doubles from 1 until ``x(p, A) < A`` and ``x(p, -A) > -A``; the
    fixed point is then bracketed and refined.
    """
    if problem.has_limits and scalar_verdict(problem).verdict is Verdict.ALL_UNBOUNDED:
        raise PreconditionError("no periodic solution: the Landesman-Lazer condition fails")

    def shift(x0: float) -> float:
        return poincare_map(problem, x0, tol) - x0

    radius = 1.0
    while True:
        hi, lo = shift(radius), shift(-radius)
        if hi < 0 < lo:
            break
        if hi == 0:
            return _orbit(problem, radius, radius, tol)
        if lo == 0:
            return _orbit(problem, -radius, radius, tol)
        radius *= 2
        if radius > max_radius:
            raise NumericalError(f"no trapping interval found up to A = {max_radius:g}")
    root = scipy.optimize.brentq(shift, -radius, radius, xtol=xtol, rtol=4 * np.finfo(float).eps)
    return _orbit(problem, root, radius, tol)


@dataclass(frozen=True)
class UnboundedWitness:
    iterates: np.ndarray
    alpha: float
    direction: int
    holds: bool
    worst_slack: float


def unbounded_witness(problem: ScalarProblem, x0: float, m: int, tol: float = ORBIT_TOL,
                      slack: float = 1e-9) -> UnboundedWitness:
    """Iterate the Poincaré map and check the blow-up inequality.

    With margin ``α > 0`` checks ``d (x(kp) - x(0)) > kα - slack`` for every
    ``k`` (``d`` the drift direction); with ``α = 0`` checks that
    ``d x(kp)`` is strictly increasing.
    """
    verdict = scalar_verdict(problem)
    if verdict.verdict is not Verdict.ALL_UNBOUNDED:
        raise PreconditionError(f"the problem has periodic solutions ({verdict.verdict.value})")
    xs = iterates(problem, x0, m, tol)
    d = verdict.direction
    k = np.arange(len(xs))
    if verdict.alpha > 0 and not verdict.boundary:
        scale = slack * np.maximum(1.0, np.abs(xs))
        margins = d * (xs - xs[0]) - k * verdict.alpha + scale
        margins = margins[1:]
    else:
        margins = d * np.diff(xs)
    worst = float(margins.min()) if margins.size else math.inf
    return UnboundedWitness(xs, verdict.alpha, d, worst > 0, worst)
