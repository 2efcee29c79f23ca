"""Global curves of periodic solutions parameterized by their average.

Every periodic solution is written ``x(t) = ξ + X(t)`` with ``∫X = 0``.  For
fixed ``ξ`` the unknowns are the oscillation ``X`` and the constant part
``μ`` of the forcing:

    first order:   X' + a(t)(ξ + X) + g(ξ + X) = μ + e(t)
    second order:  X'' + λ X' + g(ξ + X) = μ + e(t)

Both are discretized by trigonometric collocation on ``N`` equispaced nodes
and solved with Newton's method using the exact Jacobian.  Sweeping ``ξ``
traces the curve ``(μ, x)(ξ)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Sequence

import numpy as np

from . import expr as ex
from .errors import ConvergenceError, HypothesisError, ProblemError
from .ode import integrate, periodic_quadrature
from .pendulum import PendulumProblem, slope_check
from .scalar import ScalarProblem

__all__ = [
    "RESIDUAL_TOL",
    "CurveProblem",
    "Orbit",
    "SolutionCurve",
    "AverageTable",
    "differentiation_matrices",
    "solve_orbit_at_xi",
    "trace_curve",
    "average_table",
    "shooting_closure",
    "xi_grid",
]

RESIDUAL_TOL = 1e-10
MAX_NODES = 1024
TAIL_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class CurveProblem:
    """Data of a curve problem; ``e`` must have zero mean over the period.

    ``a`` is only used by first-order problems (``None`` means ``a ≡ 0``) and
    ``lam`` only by second-order ones.
    """

    order: int
    g: ex.Expression
    e: ex.Expression
    period: float = 2 * math.pi
    a: ex.Expression | None = None
    lam: float = 0.0

    def __post_init__(self):
        if self.order not in (1, 2):
            raise ProblemError("order must be 1 or 2")
        if ex.free_variables(self.g) - {"x"}:
            raise ProblemError("g must depend on x only")
        for name, e in (("e", self.e), ("a", self.a)):
            if e is not None and ex.free_variables(e) - {"t"}:
                raise ProblemError(f"{name} must depend on t only")
        if self.order == 2:
            if self.a is not None:
                raise ProblemError("second-order curve problems have no a(t) term")
            if not self.lam > 0:
                raise ProblemError("damping lambda must be positive")
        mean_e = periodic_quadrature(ex.compile_array(self.e, ["t"]), self.period).value
        if abs(mean_e) > 1e-9:
            raise ProblemError(f"e(t) must have zero mean, ∫e = {mean_e:.6g}")
        if self.a is not None:
            mean_a = periodic_quadrature(ex.compile_array(self.a, ["t"]), self.period).value
            if abs(mean_a) > 1e-9:
                raise HypothesisError(f"∫a = {mean_a:.6g} ≠ 0: the linear part is not resonant")

    @classmethod
    def first_order(cls, g: str, e: str, period: float = 2 * math.pi, a: str | None = None,
                    params: dict | None = None) -> "CurveProblem":
        params = dict(params or {})
        return cls(1, _build(g, "x", params), _build(e, "t", params), float(period),
                   None if a is None else _build(a, "t", params))

    @classmethod
    def second_order(cls, g: str, e: str, lam: float, period: float = 2 * math.pi,
                     params: dict | None = None) -> "CurveProblem":
        params = dict(params or {})
        return cls(2, _build(g, "x", params), _build(e, "t", params), float(period), None, float(lam))

    @classmethod
    def from_scalar(cls, problem: ScalarProblem) -> "CurveProblem":
        """Split ``f`` into its mean and ``e``; the mean becomes the unknown ``μ``."""
        mean_f = periodic_quadrature(ex.compile_array(problem.f, ["t"]), problem.period).value
        mean_f /= problem.period
        e = ex.sub(problem.f, ex.const(mean_f))
        a = None if problem.a == ex.Const(0.0) else problem.a
        return cls(1, problem.g, e, problem.period, a)

    @classmethod
    def from_pendulum(cls, problem: PendulumProblem) -> "CurveProblem":
        return cls(2, problem.g, problem.e, problem.period, None, problem.lam)

    @cached_property
    def _g(self) -> Callable:
        return ex.compile_array(self.g, ["x"])

    @cached_property
    def _dg(self) -> Callable:
        return ex.compile_array(ex.differentiate(self.g, "x"), ["x"])

    def g_values(self, x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(self._g(x), x.shape).astype(float)

    def dg_values(self, x: np.ndarray) -> np.ndarray:
        return np.broadcast_to(self._dg(x), x.shape).astype(float)

    def _on_nodes(self, e: ex.Expression | None, t: np.ndarray) -> np.ndarray:
        if e is None:
            return np.zeros_like(t)
        return np.broadcast_to(ex.compile_array(e, ["t"])(t), t.shape).astype(float)

    def forcing(self, t: np.ndarray) -> np.ndarray:
        return self._on_nodes(self.e, t)

    def coefficient(self, t: np.ndarray) -> np.ndarray:
        return self._on_nodes(self.a, t)

    @cached_property
    def slope_hypothesis(self):
        """Sampled ``|g'| < λ²/4 + ω²``; only meaningful for second order."""
        return slope_check(self.g, self.lam, self.period)


def _build(src: str, var: str, params: dict) -> ex.Expression:
    tree = ex.parse(str(src), [var] + list(params))
    return ex.substitute(tree, params) if params else tree


def differentiation_matrices(n: int, period: float) -> tuple[np.ndarray, np.ndarray]:
    """First and second Fourier differentiation matrices on ``n`` equispaced nodes (``n`` even)."""
    if n < 4 or n % 2:
        raise ValueError("the number of nodes must be even and at least 4")
    h = 2 * math.pi / n
    k = np.arange(n)
    diff = k[:, None] - k[None, :]
    sign = np.where(diff % 2 == 0, 1.0, -1.0)
    off = diff != 0
    arg = np.where(off, diff * h / 2, 1.0)
    d1 = np.where(off, 0.5 * sign / np.tan(arg), 0.0)
    d2 = np.where(off, -0.5 * sign / np.sin(arg) ** 2, -math.pi**2 / (3 * h**2) - 1.0 / 6.0)
    w = 2 * math.pi / period
    return d1 * w, d2 * w * w


@dataclass(frozen=True, eq=False)
class Orbit:
    """One point ``(ξ, μ, X)`` of the curve; ``nodes`` are ``X`` at ``t_j = j p / N``."""

    xi: float
    mu: float
    nodes: np.ndarray
    period: float
    order: int
    residual: float
    iterations: int

    @property
    def n(self) -> int:
        return self.nodes.size

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n) * self.period / self.n

    @cached_property
    def coefficients(self) -> tuple[np.ndarray, np.ndarray]:
        """``(a, b)`` with ``X = a₀ + Σ a_k cos kωt + b_k sin kωt``, ``k ≤ N/2``."""
        c = np.fft.rfft(self.nodes) / self.n
        a = 2 * c.real
        b = -2 * c.imag
        a[0] = c[0].real
        a[-1] = c[-1].real
        b[-1] = 0.0
        return a, b

    def __call__(self, t) -> np.ndarray:
        a, b = self.coefficients
        w = 2 * math.pi / self.period
        t = np.asarray(t, dtype=float)
        k = np.arange(a.size)
        phase = w * np.multiply.outer(t, k)
        return np.cos(phase) @ a + np.sin(phase) @ b

    def x(self, t) -> np.ndarray:
        return self.xi + self(t)

    def resample(self, n: int) -> np.ndarray:
        """Node values of the trigonometric interpolant on ``n`` nodes."""
        if n == self.n:
            return self.nodes.copy()
        return self(np.arange(n) * self.period / n)

    @property
    def mean(self) -> float:
        return float(np.mean(self.nodes))

    @property
    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.nodes)))

    @cached_property
    def derivative_nodes(self) -> np.ndarray:
        return differentiation_matrices(self.n, self.period)[0] @ self.nodes

    def l2(self, values: np.ndarray | None = None) -> float:
        """``L²(0, p)`` norm of node values (exact for the interpolant's square up to aliasing)."""
        v = self.nodes if values is None else values
        return math.sqrt(self.period / self.n * float(np.sum(v * v)))


def _residual(problem: CurveProblem, xi: float, X: np.ndarray, mu: float, ops) -> np.ndarray:
    d1, d2, a, e = ops
    x = xi + X
    if problem.order == 1:
        core = d1 @ X + a * x + problem.g_values(x)
    else:
        core = d2 @ X + problem.lam * (d1 @ X) + problem.g_values(x)
    return np.append(core - mu - e, np.mean(X))


def _jacobian(problem: CurveProblem, xi: float, X: np.ndarray, ops) -> np.ndarray:
    d1, d2, a, _ = ops
    n = X.size
    lin = d1 if problem.order == 1 else d2 + problem.lam * d1
    diag = problem.dg_values(xi + X) + (a if problem.order == 1 else 0.0)
    jac = np.zeros((n + 1, n + 1))
    jac[:n, :n] = lin + np.diag(diag)
    jac[:n, n] = -1.0
    jac[n, :n] = 1.0 / n
    return jac


def _newton(problem: CurveProblem, xi: float, X: np.ndarray, mu: float, n: int,
            tol: float, max_iter: int):
    t = np.arange(n) * problem.period / n
    d1, d2 = differentiation_matrices(n, problem.period)
    ops = (d1, d2, problem.coefficient(t), problem.forcing(t))
    r = _residual(problem, xi, X, mu, ops)
    norm = float(np.max(np.abs(r)))
    best = norm
    it = 0
    while norm > tol and it < max_iter:
        it += 1
        try:
            step = np.linalg.solve(_jacobian(problem, xi, X, ops), -r)
        except np.linalg.LinAlgError:
            raise ConvergenceError(f"singular collocation Jacobian at xi = {xi:g}", best) from None
        damp = 1.0
        while True:
            Xt, mut = X + damp * step[:n], mu + damp * step[n]
            with np.errstate(all="ignore"):
                rt = _residual(problem, xi, Xt, mut, ops)
            nt = float(np.max(np.abs(rt)))
            if np.isfinite(nt) and (nt < norm or damp < 1e-3):
                break
            damp *= 0.5
        if not np.isfinite(nt):
            break
        X, mu, r, norm = Xt, mut, rt, nt
        best = min(best, norm)
    return X, mu, norm, it


def _tail(nodes: np.ndarray) -> float:
    """Largest Fourier amplitude in the upper half of the spectrum, relative to the largest one."""
    c = np.abs(np.fft.rfft(nodes)) / nodes.size
    ref = max(1.0, float(np.max(c)))
    return float(np.max(c[c.size // 2:])) / ref


def solve_orbit_at_xi(problem: CurveProblem, xi: float, warm_start: Orbit | None = None,
                      n: int = 64, tol: float = RESIDUAL_TOL, max_iter: int = 50,
                      guess: tuple[np.ndarray, float] | None = None, adapt: bool = True) -> Orbit:
    """The unique ``(μ, X)`` with average ``ξ``.

    Starts from ``warm_start`` (resampled), an explicit ``guess`` of node
    values and ``μ``, or ``X = 0`` with ``μ = g(ξ)``.  When the converged
    orbit's spectrum is not resolved the node count doubles, up to 1024.
    """
    if problem.order == 2 and not problem.slope_hypothesis.holds:
        raise HypothesisError(
            f"sup|g'| >= {problem.slope_hypothesis.sup_estimate:.6g} is not below "
            f"lambda^2/4 + omega^2 = {problem.slope_hypothesis.bound:.6g}"
        )
    xi = float(xi)
    while True:
        if guess is not None:
            X0 = np.asarray(guess[0], dtype=float)
            if X0.size != n:
                X0 = Orbit(xi, 0.0, X0, problem.period, problem.order, 0.0, 0).resample(n)
            mu0 = float(guess[1])
        elif warm_start is not None:
            X0, mu0 = warm_start.resample(n), warm_start.mu
        else:
            X0 = np.zeros(n)
            mu0 = float(problem.g_values(np.array([xi]))[0])
        X0 = X0 - X0.mean()
        X, mu, res, it = _newton(problem, xi, X0, mu0, n, tol, max_iter)
        resolved = _tail(X) <= TAIL_TOL
        if res <= tol and (resolved or not adapt):
            return Orbit(xi, float(mu), X, problem.period, problem.order, res, it)
        if not adapt or n >= MAX_NODES:
            if res <= tol:
                raise ConvergenceError(
                    f"spectrum unresolved at xi = {xi:g} with N = {n} (tail {_tail(X):.3g})", res)
            raise ConvergenceError(f"Newton failed at xi = {xi:g} with N = {n}", res)
        if res <= tol:
            warm_start, guess = Orbit(xi, float(mu), X, problem.period, problem.order, res, it), None
        n *= 2


@dataclass(frozen=True)
class CurveFailure:
    xi: float
    message: str


@dataclass(frozen=True, eq=False)
class SolutionCurve:
    problem: CurveProblem
    orbits: tuple[Orbit, ...]
    grid: tuple[float, ...]
    failures: tuple[CurveFailure, ...] = field(default=())

    @property
    def xi(self) -> np.ndarray:
        return np.array([o.xi for o in self.orbits])

    @property
    def mu(self) -> np.ndarray:
        return np.array([o.mu for o in self.orbits])

    def gaps(self) -> np.ndarray:
        """Sup-norm distance between the oscillations of adjacent orbits."""
        return np.array([_distance(a, b) for a, b in zip(self.orbits, self.orbits[1:])])

    def at(self, xi: float) -> Orbit:
        for o in self.orbits:
            if o.xi == xi:
                return o
        raise KeyError(xi)

    def rows(self) -> list[tuple[float, float, float, float]]:
        """``(ξ, μ, residual, ‖X‖_sup)`` per orbit."""
        return [(o.xi, o.mu, o.residual, o.sup_norm) for o in self.orbits]


def _distance(a: Orbit, b: Orbit) -> float:
    n = max(a.n, b.n)
    return float(np.max(np.abs(a.resample(n) - b.resample(n))))


def xi_grid(lo: float, hi: float, step: float) -> list[float]:
    """``lo, lo + step, ..., hi`` without accumulated rounding."""
    if step <= 0 or hi < lo:
        raise ValueError("need lo <= hi and a positive step")
    count = int(math.floor((hi - lo) / step + 1e-9))
    return [lo + k * step for k in range(count + 1)]


def trace_curve(problem: CurveProblem, grid: Sequence[float], n: int = 64,
                max_gap: float | None = 0.5, max_depth: int = 12) -> SolutionCurve:
    """Natural continuation in ``ξ`` with warm starts.

    A failed point is recorded and the next one starts cold.  With
    ``max_gap`` set, midpoints are inserted between neighbours whose
    oscillations differ by ``max_gap`` or more in sup norm.
    """
    grid = [float(x) for x in grid]
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("the xi grid must be strictly increasing")
    orbits: list[Orbit] = []
    failures: list[CurveFailure] = []
    warm = None

    def solve(xi, start):
        try:
            return solve_orbit_at_xi(problem, xi, start, n)
        except ConvergenceError as exc:
            failures.append(CurveFailure(xi, str(exc)))
            return None

    def bridge(left: Orbit, right: Orbit, depth: int) -> list[Orbit]:
        if max_gap is None or depth >= max_depth or _distance(left, right) < max_gap:
            return []
        mid = solve(0.5 * (left.xi + right.xi), left)
        if mid is None:
            return []
        return bridge(left, mid, depth + 1) + [mid] + bridge(mid, right, depth + 1)

    for xi in grid:
        orbit = solve(xi, warm)
        if orbit is None:
            warm = None
            continue
        if orbits:
            orbits.extend(bridge(orbits[-1], orbit, 0))
        orbits.append(orbit)
        warm = orbit
    return SolutionCurve(problem, tuple(orbits), tuple(grid), tuple(failures))


@dataclass(frozen=True, eq=False)
class AverageTable:
    """The curve presented as ``ξ`` against ``ν = μ(ξ)``."""

    nu: np.ndarray
    xi: np.ndarray
    curve: SolutionCurve

    def rows(self) -> list[tuple[float, float]]:
        return list(zip(self.nu.tolist(), self.xi.tolist()))


def average_table(problem: CurveProblem, grid: Sequence[float] | None = None, n: int = 64) -> AverageTable:
    grid = xi_grid(-40.0, 40.0, 0.5) if grid is None else grid
    curve = trace_curve(problem, grid, n)
    return AverageTable(curve.mu, curve.xi, curve)


def shooting_closure(problem: CurveProblem, orbit: Orbit, tol: float = 1e-12) -> float:
    """Integrate from the orbit's initial state over one period and return the mismatch."""
    force = ex.compile_scalar(ex.sub(problem.e, problem.g), ["t", "x"])
    mu = orbit.mu
    if problem.order == 1:
        a = ex.compile_scalar(problem.a if problem.a is not None else ex.Const(0.0), ["t"])

        def rhs(t, y):
            return np.array([mu + force(t, y[0]) - a(t) * y[0]])

        y0 = np.array([orbit.xi + orbit.nodes[0]])
    else:
        lam = problem.lam

        def rhs(t, y):
            return np.array([y[1], mu + force(t, y[0]) - lam * y[1]])

        y0 = np.array([orbit.xi + orbit.nodes[0], orbit.derivative_nodes[0]])
    end = integrate(rhs, 0.0, y0, problem.period, tol, tol, dense=False).y[-1]
    return float(np.max(np.abs(end - y0)))
