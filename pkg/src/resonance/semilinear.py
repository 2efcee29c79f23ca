"""Semilinear systems ``x' + A(t) x + f(x) = g(t)`` with a resonant linear part.

If the adjoint system ``z' = A(t)^T z`` has a positive periodic solution and
each ``f_i`` lies strictly between ``α_i`` and ``β_i``, a periodic solution
can exist only when

    Σ α_i ∫z_i  <  ∫ g · z  <  Σ β_i ∫z_i .

When this fails, ``V(x) = ∓Σ z_i(0) x_i`` increases strictly along the
Poincaré map and every solution is unbounded.  When it holds nothing is
claimed: sufficiency is an open question.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import expr as ex
from .errors import HypothesisError, PreconditionError, ProblemError
from .linear import (
    PeriodicSystem,
    PositiveAdjoint,
    adjoint_fundamental,
    adjoint_integrals,
    fundamental_matrix,
    positive_adjoint_solution,
)
from .ode import DEFAULT_TOL, integrate
from .smatrix import UNIT_CIRCLE_TOL, eigenvalues

__all__ = [
    "SystemProblem",
    "NecessaryCondition",
    "SemilinearVerdict",
    "InstabilityRun",
    "state_names",
    "resonance_check",
    "necessary_condition",
    "semilinear_verdict",
    "instability_run",
    "integral_identity",
]


def state_names(n: int) -> list[str]:
    return [f"x{i + 1}" for i in range(n)]


def _bound_samples(n: int, count: int = 10_000, radius: float = 1e3, seed: int = 0) -> np.ndarray:
    """Points of ``[-radius, radius]^n``: random interior points plus rays."""
    rng = np.random.default_rng(seed)
    rays = []
    directions = np.vstack([np.eye(n), -np.eye(n), np.ones(n), -np.ones(n)])
    for d in directions:
        rays.append(np.outer(np.logspace(-3, math.log10(radius), 50), d))
    rays = np.vstack(rays)
    rest = max(count - len(rays), 0)
    return np.vstack([rays, rng.uniform(-radius, radius, size=(rest, n))])


@dataclass(frozen=True, eq=False)
class SystemProblem:
    """``x' + A(t) x + f(x) = g(t)``; ``linear`` stores ``M = -A`` and forcing ``g``."""

    linear: PeriodicSystem
    nonlinearity: tuple[ex.Expression, ...]
    alpha: tuple[float, ...]
    beta: tuple[float, ...]

    def __post_init__(self):
        n = self.linear.dimension
        if not (len(self.nonlinearity) == len(self.alpha) == len(self.beta) == n):
            raise ProblemError(f"nonlinearity and bounds must have {n} components")
        names = set(state_names(n))
        for i, fi in enumerate(self.nonlinearity):
            extra = ex.free_variables(fi) - names
            if extra:
                raise ProblemError(f"f{i + 1} uses undeclared variables {sorted(extra)}")
            if not self.alpha[i] < self.beta[i]:
                raise ProblemError(f"alpha{i + 1} must be below beta{i + 1}")
        pts = _bound_samples(n)
        cols = [pts[:, j] for j in range(n)]
        for i, fi in enumerate(self.nonlinearity):
            vals = ex.compile_array(fi, state_names(n))(*cols)
            if not (np.all(vals > self.alpha[i]) and np.all(vals < self.beta[i])):
                raise ProblemError(f"f{i + 1} leaves ({self.alpha[i]}, {self.beta[i]}) on the sample")

    @classmethod
    def from_strings(cls, A, f, alpha, beta, g=None, period: float = 2 * math.pi,
                     params: dict | None = None) -> "SystemProblem":
        params = dict(params or {})
        linear = PeriodicSystem.from_strings(A, g, period, params, negated=True)
        n = linear.dimension
        names = state_names(n) + list(params)
        nl = []
        for src in f:
            tree = ex.parse(str(src), names)
            nl.append(ex.substitute(tree, params) if params else tree)
        return cls(linear, tuple(nl), tuple(float(a) for a in alpha), tuple(float(b) for b in beta))

    @property
    def dimension(self) -> int:
        return self.linear.dimension

    @property
    def period(self) -> float:
        return self.linear.period

    @cached_property
    def _f(self) -> Callable:
        return ex.compile_vector(self.nonlinearity, state_names(self.dimension))

    def f_at(self, x) -> np.ndarray:
        return np.array(self._f(*x))

    @cached_property
    def field(self) -> Callable[[float, np.ndarray], np.ndarray]:
        lin = self.linear.field()
        f = self._f

        def rhs(t, x):
            return lin(t, x) - np.array(f(*x))

        return rhs

    @cached_property
    def positive_adjoint(self) -> PositiveAdjoint:
        return positive_adjoint_solution(self.linear)


def resonance_check(problem: SystemProblem, tol: float = DEFAULT_TOL) -> tuple[bool, bool]:
    """Whether 1 is a multiplier of ``X(p)`` and of ``Z(p)``."""
    p = problem.period
    xp = fundamental_matrix(problem.linear, p, tol)
    zp = adjoint_fundamental(problem.linear, p, tol)

    def has_one(m):
        spec = eigenvalues(m)
        return bool(np.min(np.abs(spec.eigenvalues - 1.0)) <= max(UNIT_CIRCLE_TOL, spec.cluster_tol))

    return has_one(xp), has_one(zp)


@dataclass(frozen=True)
class NecessaryCondition:
    lower: float
    value: float
    upper: float
    satisfied: bool
    z0: np.ndarray
    z_integrals: np.ndarray


def necessary_condition(problem: SystemProblem, tol: float = DEFAULT_TOL, rel_tol: float = 1e-10) -> NecessaryCondition:
    """Necessary condition for a periodic solution, weighted by a positive adjoint solution.

    Raises :class:`HypothesisError` if no positive periodic adjoint solution
    exists (the criterion does not apply).
    """
    pos = problem.positive_adjoint
    _, zint, gz, _ = adjoint_integrals(problem.linear, pos.z0, tol)
    lower = float(np.dot(problem.alpha, zint))
    upper = float(np.dot(problem.beta, zint))
    slack = rel_tol * max(1.0, abs(lower), abs(upper), abs(gz))
    ok = lower + slack < gz < upper - slack
    return NecessaryCondition(lower, gz, upper, ok, pos.z0, zint)


class SemilinearVerdict(str, Enum):
    INCONCLUSIVE = "Inconclusive"
    ALL_UNBOUNDED = "AllUnbounded"


def semilinear_verdict(problem: SystemProblem) -> tuple[SemilinearVerdict, NecessaryCondition]:
    cond = necessary_condition(problem)
    return (SemilinearVerdict.INCONCLUSIVE if cond.satisfied else SemilinearVerdict.ALL_UNBOUNDED), cond


@dataclass(frozen=True)
class InstabilityRun:
    states: np.ndarray  # x(kp), k = 0..m
    V: np.ndarray
    orientation: int  # V = orientation * Σ z_i(0) x_i
    consistent: bool
    growth_rate: float

    @property
    def norms(self) -> np.ndarray:
        return np.linalg.norm(self.states, axis=1)


def instability_run(problem: SystemProblem, x0, m: int, tol: float = DEFAULT_TOL,
                    slack: float = 1e-9) -> InstabilityRun:
    """Iterate the Poincaré map and track the growth functional.

    ``V = -Σ z_i(0) x_i`` when ``∫g·z`` is at or below the lower bound and
    ``V = +Σ z_i(0) x_i`` when at or above the upper bound.  A decrease by
    more than ``slack`` would contradict the argument and is flagged via
    ``consistent = False``.
    """
    cond = necessary_condition(problem, tol)
    if cond.satisfied:
        raise PreconditionError("the necessary condition holds; no instability conclusion")
    orientation = -1 if cond.value <= 0.5 * (cond.lower + cond.upper) else 1
    x = np.asarray(x0, dtype=float)
    states = [x]
    p = problem.period
    for k in range(m):
        x = integrate(problem.field, k * p, x, (k + 1) * p, tol, tol, dense=False).y[-1]
        states.append(x)
    states = np.array(states)
    V = orientation * states @ cond.z0
    inc = np.diff(V)
    scale = slack * np.maximum(1.0, np.abs(V[1:]))
    consistent = bool(np.all(inc > -scale))
    rate = float(inc.mean()) if inc.size else 0.0
    return InstabilityRun(states, V, orientation, consistent and bool(np.all(inc > 0)), rate)


def integral_identity(problem: SystemProblem, x0, tol: float = 1e-12) -> tuple[float, float]:
    """Both sides of ``Σ z_i(0)[x_i(p) - x_i(0)] = ∫g·z - ∫f(x)·z``."""
    n = problem.dimension
    coeffs = problem.linear._coeffs
    f = problem._f
    z0 = problem.positive_adjoint.z0

    def rhs(t, y):
        c = coeffs(t)
        m = np.array(c[: n * n]).reshape(n, n)
        g = np.array(c[n * n:])
        x, z = y[:n], y[n: 2 * n]
        fx = np.array(f(*x))
        out = np.empty(2 * n + 1)
        out[:n] = m @ x + g - fx
        out[n: 2 * n] = -(m.T @ z)
        out[2 * n] = (g - fx) @ z
        return out

    y0 = np.concatenate([np.asarray(x0, dtype=float), z0, [0.0]])
    end = integrate(rhs, 0.0, y0, problem.period, tol, tol, dense=False).y[-1]
    lhs = float(z0 @ (end[:n] - y0[:n]))
    return lhs, float(end[2 * n])
