"""Linear periodic systems ``x' = M(t) x + q(t)`` at (and away from) resonance.

The monodromy matrix ``X(p)`` and the one-period response ``b = x(p)`` from
``x(0) = 0`` decide everything:

* ``I - X(p)`` non-singular: a unique periodic solution, stable when the
  spectral radius of ``X(p)`` is below one.
* singular and ``b`` outside the range of ``I - X(p)``: every solution is
  unbounded (Massera), witnessed by a vector ``v0`` with
  ``(x(mp), v0) = (x0, v0) + m (b, v0)``.
* singular and ``b`` in the range: infinitely many periodic solutions, and
  the unit-circle spectrum of ``X(p)`` decides whether other solutions
  blow up, approach a periodic one, or stay bounded.

The adjoint system ``z' = -M(t)^T z`` has fundamental matrix
``Z = (X^T)^{-1}``; its periodic solutions give the solvability test
``∫ q · z dt = 0`` and, when positive, the weights used by
:mod:`resonance.semilinear`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Callable, Mapping, Sequence

import numpy as np
import scipy.optimize

from . import expr as ex
from .errors import ConvergenceError, HypothesisError, NumericalError, PreconditionError, ProblemError
from .ode import DEFAULT_TOL, Trajectory, integrate
from .smatrix import (
    RANK_TOL,
    UNIT_CIRCLE_TOL,
    EigenCluster,
    SpectralData,
    eigenvalues,
    min_norm_solution,
    null_space,
    range_membership,
)

__all__ = [
    "PeriodicSystem",
    "MonodromyReport",
    "Case",
    "ResonanceVerdict",
    "PeriodicSet",
    "Witness",
    "IterateResult",
    "Solvability",
    "PositiveAdjoint",
    "TuneResult",
    "RANGE_TOL",
    "fundamental_matrix",
    "monodromy_report",
    "classify",
    "periodic_initial_set",
    "massera_witness",
    "unbounded_direction",
    "iterate_formula",
    "simulate_periods",
    "adjoint_fundamental",
    "solvability_test",
    "positive_adjoint_solution",
    "adjoint_integrals",
    "positive_flow_check",
    "tune_to_resonance",
]

# b is obtained by integration, so its projection on the cokernel carries
# integration error of order the ODE tolerance.
RANGE_TOL = 1e-7


def _to_expr(item, variables: Sequence[str], params: Mapping[str, float]) -> ex.Expression:
    if isinstance(item, (int, float)):
        return ex.const(float(item))
    if isinstance(item, str):
        tree = ex.parse(item, list(variables) + list(params))
        return ex.substitute(tree, dict(params)) if params else tree
    if isinstance(item, (ex.Const, ex.Var, ex.Neg, ex.BinOp, ex.Call)):
        return ex.substitute(item, dict(params)) if params else item
    raise ProblemError(f"cannot interpret {item!r} as an expression")


@dataclass(frozen=True, eq=False)
class PeriodicSystem:
    """Canonical linear periodic system ``x' = M(t) x + q(t)`` of period ``p``.

    Systems written as ``x' + A(t) x = q(t)`` are stored with ``M = -A`` and
    ``source = "x' + A(t)x = q(t)"``.
    """

    period: float
    matrix: tuple[tuple[ex.Expression, ...], ...]
    forcing: tuple[ex.Expression, ...]
    source: str = "x' = M(t)x + q(t)"

    def __post_init__(self):
        n = len(self.matrix)
        if n == 0 or any(len(row) != n for row in self.matrix):
            raise ProblemError("coefficient matrix must be square and non-empty")
        if len(self.forcing) != n:
            raise ProblemError(f"forcing has {len(self.forcing)} entries, expected {n}")
        if not (self.period > 0 and math.isfinite(self.period)):
            raise ProblemError(f"period must be positive, got {self.period}")
        m0, m1 = self.matrix_at(0.0), self.matrix_at(self.period)
        q0, q1 = self.forcing_at(0.0), self.forcing_at(self.period)
        if np.max(np.abs(m0 - m1)) > 1e-10 * max(1.0, np.max(np.abs(m0))):
            raise ProblemError("coefficient matrix is not periodic with the declared period")
        if np.max(np.abs(q0 - q1)) > 1e-10 * max(1.0, np.max(np.abs(q0))):
            raise ProblemError("forcing is not periodic with the declared period")

    @classmethod
    def from_strings(
        cls,
        matrix,
        forcing=None,
        period: float = 2 * math.pi,
        params: Mapping[str, float] | None = None,
        negated: bool = False,
    ) -> "PeriodicSystem":
        """Build from expression strings in ``t``.

        With ``negated=True`` the matrix is read as ``A`` in
        ``x' + A(t) x = q(t)``.
        """
        params = dict(params or {})
        rows = tuple(tuple(_to_expr(c, ["t"], params) for c in row) for row in matrix)
        if negated:
            rows = tuple(tuple(ex.neg(c) for c in row) for row in rows)
        n = len(rows)
        q = tuple(_to_expr(c, ["t"], params) for c in (forcing if forcing is not None else [0.0] * n))
        source = "x' + A(t)x = q(t)" if negated else "x' = M(t)x + q(t)"
        return cls(float(period), rows, q, source)

    @property
    def dimension(self) -> int:
        return len(self.matrix)

    @cached_property
    def _coeffs(self) -> Callable[[float], tuple]:
        flat = [c for row in self.matrix for c in row] + list(self.forcing)
        return ex.compile_vector(flat, ["t"])

    @cached_property
    def unforced(self) -> bool:
        return all(isinstance(c, ex.Const) and c.value == 0.0 for c in self.forcing)

    def matrix_at(self, t: float) -> np.ndarray:
        n = self.dimension
        return np.array(self._coeffs(float(t))[: n * n]).reshape(n, n)

    def forcing_at(self, t: float) -> np.ndarray:
        n = self.dimension
        return np.array(self._coeffs(float(t))[n * n:])

    def with_forcing(self, forcing: Sequence[ex.Expression]) -> "PeriodicSystem":
        return PeriodicSystem(self.period, self.matrix, tuple(forcing), self.source)

    def transposed_negated(self) -> "PeriodicSystem":
        """The adjoint homogeneous system ``z' = -M(t)^T z``."""
        n = self.dimension
        rows = tuple(tuple(ex.neg(self.matrix[j][i]) for j in range(n)) for i in range(n))
        return PeriodicSystem(self.period, rows, tuple(ex.const(0.0) for _ in range(n)),
                              "z' = -M(t)^T z")

    # ODE right-hand sides -------------------------------------------------
    def field(self) -> Callable[[float, np.ndarray], np.ndarray]:
        """``(t, x) -> M(t) x + q(t)`` for a single state vector."""
        n = self.dimension
        coeffs = self._coeffs

        def rhs(t, x):
            c = coeffs(t)
            return np.array(c[: n * n]).reshape(n, n) @ x + np.array(c[n * n:])

        return rhs

    def matrix_field(self, columns: int, forced_last: bool = False):
        """Right-hand side for an ``n x columns`` matrix state, flattened row-major.

        With ``forced_last`` the last column also receives ``q(t)``.
        """
        n = self.dimension
        coeffs = self._coeffs

        def rhs(t, y):
            c = coeffs(t)
            out = np.array(c[: n * n]).reshape(n, n) @ y.reshape(n, columns)
            if forced_last:
                out[:, -1] += c[n * n:]
            return out.ravel()

        return rhs

    def adjoint_matrix_field(self, columns: int):
        n = self.dimension
        coeffs = self._coeffs

        def rhs(t, y):
            c = coeffs(t)
            return (-(np.array(c[: n * n]).reshape(n, n).T) @ y.reshape(n, columns)).ravel()

        return rhs


def _power(mat: np.ndarray, k: int) -> np.ndarray:
    return np.linalg.matrix_power(mat, k) if k else np.eye(mat.shape[0])


def _reduce_time(sys: PeriodicSystem, t: float) -> tuple[int, float]:
    if t < 0:
        raise ValueError("negative times are not supported")
    k = int(math.floor(t / sys.period))
    r = t - k * sys.period
    if r < 0:
        r = 0.0
    return k, r


def fundamental_matrix(sys: PeriodicSystem, t: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``X(t)`` with ``X' = M X``, ``X(0) = I``; uses ``X(t + kp) = X(t) X(p)^k``."""
    n = sys.dimension
    k, r = _reduce_time(sys, float(t))
    rhs = sys.matrix_field(n)

    def flow(s):
        if s == 0.0:
            return np.eye(n)
        tr = integrate(rhs, 0.0, np.eye(n).ravel(), s, tol, tol, dense=False)
        return tr.y[-1].reshape(n, n)

    head = flow(r)
    if k == 0:
        return head
    return head @ _power(flow(sys.period), k)


def adjoint_fundamental(sys: PeriodicSystem, t: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    """``Z(t)`` with ``Z' = -M^T Z``, ``Z(0) = I``, by direct integration."""
    n = sys.dimension
    k, r = _reduce_time(sys, float(t))
    rhs = sys.adjoint_matrix_field(n)

    def flow(s):
        if s == 0.0:
            return np.eye(n)
        tr = integrate(rhs, 0.0, np.eye(n).ravel(), s, tol, tol, dense=False)
        return tr.y[-1].reshape(n, n)

    head = flow(r)
    if k == 0:
        return head
    return head @ _power(flow(sys.period), k)


@dataclass(frozen=True, eq=False)
class MonodromyReport:
    system: PeriodicSystem
    monodromy: np.ndarray
    spectrum: SpectralData
    b: np.ndarray
    kernel: np.ndarray
    rank_tol: float
    ode_tol: float

    @property
    def resonant(self) -> bool:
        return self.kernel.shape[1] > 0

    @property
    def singular_scale(self) -> float:
        """Reference magnitude for rank decisions on ``I - X(p)``."""
        return max(1.0, float(np.linalg.norm(self.monodromy, 2)))

    @property
    def defect_matrix(self) -> np.ndarray:
        return np.eye(self.system.dimension) - self.monodromy


def monodromy_report(
    sys: PeriodicSystem, rank_tol: float = RANK_TOL, tol: float = DEFAULT_TOL
) -> MonodromyReport:
    """Integrate ``[X | x]`` over one period from ``[I | 0]``.

    The last column at ``t = p`` is ``b = X(p) ∫ X^{-1} q``, the response of
    the forced system started from rest.
    """
    n = sys.dimension
    y0 = np.hstack([np.eye(n), np.zeros((n, 1))]).ravel()
    tr = integrate(sys.matrix_field(n + 1, forced_last=True), 0.0, y0, sys.period, tol, tol,
                   dense=False)
    end = tr.y[-1].reshape(n, n + 1)
    xp = end[:, :n].copy()
    b = end[:, n].copy()
    spectrum = eigenvalues(xp, rank_tol=rank_tol)
    scale = max(1.0, float(np.linalg.norm(xp, 2)))
    kernel = null_space(np.eye(n) - xp, rank_tol, scale)
    return MonodromyReport(sys, xp, spectrum, b, kernel, rank_tol, tol)


class Case(str, Enum):
    NON_RESONANT = "NonResonant"
    ALL_UNBOUNDED = "Case1_AllUnbounded"
    PERIODIC_PLUS_UNBOUNDED = "Case2i_PeriodicPlusUnbounded"
    ALL_APPROACH_PERIODIC = "Case2ii_AllApproachPeriodic"
    ALL_BOUNDED = "Case2iii_AllBounded"
    UNCOVERED = "UncoveredJordanBlock"


_CASE_TEXT = {
    Case.NON_RESONANT: "non-resonant: unique periodic solution",
    Case.ALL_UNBOUNDED: "Case 1: all solutions unbounded",
    Case.PERIODIC_PLUS_UNBOUNDED: "Case 2(i): infinitely many periodic solutions and unbounded solutions",
    Case.ALL_APPROACH_PERIODIC: "Case 2(ii): every solution approaches a periodic solution",
    Case.ALL_BOUNDED: "Case 2(iii): all solutions bounded",
    Case.UNCOVERED: "uncovered: a unit-circle multiplier has a non-diagonal Jordan block",
}


@dataclass(frozen=True)
class ResonanceVerdict:
    case: Case
    spectral_radius: float
    unit_circle: tuple[EigenCluster, ...]
    defect: float | None
    stability: str | None
    rank_tol: float
    range_tol: float

    @property
    def diagonal(self) -> tuple[bool, ...]:
        return tuple(c.diagonal for c in self.unit_circle)

    @property
    def covered(self) -> bool:
        return self.case is not Case.UNCOVERED

    def describe(self) -> str:
        text = _CASE_TEXT[self.case]
        if self.case is Case.NON_RESONANT and self.stability:
            text += f" ({self.stability})"
        return text


def classify(rep: MonodromyReport, range_tol: float = RANGE_TOL) -> ResonanceVerdict:
    """Sort a monodromy report into the extended Massera cases.

    A unit-circle multiplier whose geometric multiplicity is below its
    algebraic multiplicity (with spectral radius one) is reported as
    :attr:`Case.UNCOVERED` rather than guessed.
    """
    spec = rep.spectrum
    rho = spec.spectral_radius
    unit = spec.unit_circle()
    if not rep.resonant:
        if rho < 1.0 - UNIT_CIRCLE_TOL:
            stability = "stable"
        elif rho > 1.0 + UNIT_CIRCLE_TOL:
            stability = "unstable"
        else:
            stability = "neutral"
        return ResonanceVerdict(Case.NON_RESONANT, rho, unit, None, stability, rep.rank_tol, range_tol)
    test = range_membership(rep.defect_matrix, rep.b, range_tol, rep.rank_tol, rep.singular_scale)
    if not test.in_range:
        case = Case.ALL_UNBOUNDED
    elif rho > 1.0 + UNIT_CIRCLE_TOL:
        case = Case.PERIODIC_PLUS_UNBOUNDED
    elif not all(c.diagonal for c in unit):
        case = Case.UNCOVERED
    elif all(abs(c.value - 1.0) <= spec.cluster_tol for c in unit):
        case = Case.ALL_APPROACH_PERIODIC
    else:
        case = Case.ALL_BOUNDED
    return ResonanceVerdict(case, rho, unit, test.defect, None, rep.rank_tol, range_tol)


@dataclass(frozen=True)
class PeriodicSet:
    """All periodic initial conditions: ``particular + span(kernel)``."""

    particular: np.ndarray | None
    kernel: np.ndarray

    def contains(self, x0, tol: float = 1e-8) -> bool:
        if self.particular is None:
            return False
        d = np.asarray(x0, dtype=float) - self.particular
        if self.kernel.shape[1]:
            d = d - self.kernel @ (self.kernel.T @ d)
        return float(np.linalg.norm(d)) <= tol * max(1.0, float(np.linalg.norm(x0)))


def periodic_initial_set(rep: MonodromyReport, range_tol: float = RANGE_TOL) -> PeriodicSet:
    """Solve ``(I - X(p)) x0 = b`` (minimum-norm) when solvable."""
    a = rep.defect_matrix
    test = range_membership(a, rep.b, range_tol, rep.rank_tol, rep.singular_scale)
    if not test.in_range:
        return PeriodicSet(None, rep.kernel)
    x0 = min_norm_solution(a, rep.b, rep.rank_tol, rep.singular_scale)
    return PeriodicSet(x0, rep.kernel)


@dataclass(frozen=True)
class Witness:
    v0: np.ndarray
    pairing: float  # (b, v0)


def massera_witness(rep: MonodromyReport, range_tol: float = RANGE_TOL) -> Witness:
    """Unit ``v0`` with ``(I - X(p))^T v0 = 0`` maximising ``|(b, v0)|``.

    The sign is fixed so that the largest-magnitude component is positive.
    """
    verdict = classify(rep, range_tol)
    if verdict.case is not Case.ALL_UNBOUNDED:
        raise PreconditionError(f"a witness exists only when all solutions are unbounded, got {verdict.case.value}")
    cok = null_space(rep.defect_matrix.T, rep.rank_tol, rep.singular_scale)
    v = cok @ (cok.T @ rep.b)
    v = v / np.linalg.norm(v)
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return Witness(v, float(rep.b @ v))


def unbounded_direction(rep: MonodromyReport) -> tuple[complex, np.ndarray]:
    """Dominant multiplier and a unit eigenvector (real part if complex).

    When ``ρ > 1`` the homogeneous solution from this vector grows like
    ``ρ^m`` over ``m`` periods.
    """
    vals, vecs = np.linalg.eig(rep.monodromy)
    i = int(np.argmax(np.abs(vals)))
    v = vecs[:, i]
    v = np.real(v) if np.linalg.norm(np.real(v)) > 1e-8 else np.imag(v)
    v = v / np.linalg.norm(v)
    if v[np.argmax(np.abs(v))] < 0:
        v = -v
    return complex(vals[i]), v


@dataclass(frozen=True)
class IterateResult:
    x: np.ndarray
    periodic_form: np.ndarray | None = None


def iterate_formula(rep: MonodromyReport, x0, m: int, range_tol: float = RANGE_TOL) -> IterateResult:
    """``x(mp) = X(p)^m x0 + Σ_{k<m} X(p)^k b`` by repeated multiplication.

    When a periodic initial condition ``x̄0`` exists the equivalent form
    ``x̄0 + X(p)^m (x0 - x̄0)`` is returned alongside.
    """
    if m < 0:
        raise ValueError("m must be non-negative")
    xp = rep.monodromy
    x0 = np.asarray(x0, dtype=float)
    power_k = np.eye(xp.shape[0])
    total = np.zeros_like(x0)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(m):
            total = total + power_k @ rep.b
            power_k = power_k @ xp
            if not (np.all(np.isfinite(power_k)) and np.all(np.isfinite(total))):
                raise NumericalError(f"numerically unbounded at m={k + 1}")
        x = power_k @ x0 + total
    if not np.all(np.isfinite(x)):
        raise NumericalError(f"numerically unbounded at m={m}")
    pset = periodic_initial_set(rep, range_tol)
    alt = None
    if pset.particular is not None:
        alt = pset.particular + power_k @ (x0 - pset.particular)
    return IterateResult(x, alt)


def simulate_periods(sys: PeriodicSystem, x0, m: int, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Direct integration: rows are ``x(kp)`` for ``k = 0..m``."""
    rhs = sys.field()
    out = [np.asarray(x0, dtype=float)]
    x = out[0]
    p = sys.period
    for k in range(m):
        x = integrate(rhs, k * p, x, (k + 1) * p, tol, tol, dense=False).y[-1]
        out.append(x)
    return np.array(out)


def _adjoint_kernel(sys: PeriodicSystem, rank_tol: float, tol: float) -> tuple[np.ndarray, np.ndarray]:
    n = sys.dimension
    zp = adjoint_fundamental(sys, sys.period, tol)
    scale = max(1.0, float(np.linalg.norm(zp, 2)))
    return zp, null_space(np.eye(n) - zp, rank_tol, scale)


def adjoint_integrals(sys: PeriodicSystem, z0, tol: float = DEFAULT_TOL, dense: bool = False):
    """Integrate ``z = Z(t) z0`` over one period with running integrals.

    Returns ``(trajectory, ∫z, ∫q·z, ∫(|q|² + |z|²)/2)``; the state layout is
    ``[z (n), ∫z (n), ∫q·z, ∫(|q|²+|z|²)/2]``.
    """
    n = sys.dimension
    coeffs = sys._coeffs

    def rhs(t, y):
        c = coeffs(t)
        m = np.array(c[: n * n]).reshape(n, n)
        q = np.array(c[n * n:])
        z = y[:n]
        out = np.empty(2 * n + 2)
        out[:n] = -(m.T @ z)
        out[n: 2 * n] = z
        out[2 * n] = q @ z
        out[2 * n + 1] = 0.5 * (q @ q + z @ z)
        return out

    y0 = np.zeros(2 * n + 2)
    y0[:n] = z0
    tr = integrate(rhs, 0.0, y0, sys.period, tol, tol, dense=dense)
    end = tr.y[-1]
    return tr, end[n: 2 * n].copy(), float(end[2 * n]), float(end[2 * n + 1])


@dataclass(frozen=True)
class Solvability:
    solvable: bool
    residuals: tuple[float, ...]
    scales: tuple[float, ...]
    kernel: np.ndarray = field(repr=False)


def solvability_test(
    sys: PeriodicSystem, rank_tol: float = RANK_TOL, tol: float = DEFAULT_TOL, threshold: float = 1e-8
) -> Solvability:
    """Check ``∫₀ᵖ q · z dt = 0`` for a basis of periodic adjoint solutions."""
    _, kernel = _adjoint_kernel(sys, rank_tol, tol)
    if kernel.shape[1] == 0:
        raise PreconditionError("the adjoint system has no periodic solution (non-resonant system)")
    residuals, scales = [], []
    for j in range(kernel.shape[1]):
        _, _, r, s = adjoint_integrals(sys, kernel[:, j], tol)
        residuals.append(r)
        scales.append(max(1.0, s))
    ok = all(abs(r) <= threshold * s for r, s in zip(residuals, scales))
    return Solvability(ok, tuple(residuals), tuple(scales), kernel)


@dataclass(frozen=True)
class PositiveAdjoint:
    """A componentwise positive periodic solution of ``z' = -M^T z``.

    ``z0`` is normalised so that its components sum to the dimension.
    """

    z0: np.ndarray
    perron: complex
    t: np.ndarray
    z: np.ndarray
    integrals: np.ndarray
    offdiag_positive: bool
    trace_integral: float
    planar_criterion: bool | None

    @property
    def min_value(self) -> float:
        return float(self.z.min())


def _adjoint_offdiag_positive(sys: PeriodicSystem, samples: int = 256) -> bool:
    n = sys.dimension
    if n == 1:
        return True
    mask = ~np.eye(n, dtype=bool)
    for t in np.linspace(0.0, sys.period, samples, endpoint=False):
        if np.any((-sys.matrix_at(t).T)[mask] <= 0):
            return False
    return True


def _trace_integral(sys: PeriodicSystem) -> float:
    from .ode import periodic_quadrature

    return periodic_quadrature(lambda s: float(np.trace(sys.matrix_at(float(s)))), sys.period).value


def positive_adjoint_solution(
    sys: PeriodicSystem,
    rank_tol: float = RANK_TOL,
    tol: float = DEFAULT_TOL,
    grid: int = 512,
) -> PositiveAdjoint:
    """Find a positive periodic adjoint solution via the Perron root of ``Z(p)``.

    The dominant multiplier of ``Z(p)`` must equal one; a positive vector is
    sought in its eigenspace (the projection of ``(1, ..., 1)`` when the
    eigenspace has dimension above one).  Positivity of ``Z(t) z0`` is then
    checked on ``grid`` points.  Also reports the sufficient conditions:
    positive off-diagonal entries of ``-M^T`` and, for ``n = 2``, the sign of
    ``∫ trace`` of the source-form matrix (Liouville).
    """
    n = sys.dimension
    zp, kernel = _adjoint_kernel(sys, rank_tol, tol)
    spec = eigenvalues(zp, rank_tol=rank_tol)
    perron = max(spec.eigenvalues, key=abs)
    if abs(perron - 1.0) > max(UNIT_CIRCLE_TOL, spec.cluster_tol) or kernel.shape[1] == 0:
        raise HypothesisError(f"no unit Perron multiplier: dominant multiplier of Z(p) is {perron:.6g}")
    if kernel.shape[1] == 1:
        v = kernel[:, 0]
    else:
        ones = np.ones(n)
        v = kernel @ (kernel.T @ ones)
    if v.sum() < 0:
        v = -v
    if np.any(v <= 0):
        raise HypothesisError(f"Perron eigenvector is not positive: {v}")
    z0 = v * (n / v.sum())
    tr, integ, _, _ = adjoint_integrals(sys.with_forcing([ex.const(0.0)] * n), z0, tol, dense=True)
    ts = np.linspace(0.0, sys.period, grid)
    zs = tr(ts)[:, :n]
    if np.any(zs <= 0):
        raise HypothesisError(f"adjoint solution loses positivity (min {zs.min():.3g})")
    offdiag = _adjoint_offdiag_positive(sys)
    # source form x' + A x: trace A = -trace M
    trace_a = -_trace_integral(sys)
    planar = None
    if n == 2:
        planar = bool(offdiag and trace_a <= 1e-12)
    return PositiveAdjoint(z0, complex(perron), ts, zs, integ, offdiag, trace_a, planar)


def positive_flow_check(sys: PeriodicSystem, t_end: float | None = None, samples: int = 512,
                        tol: float = DEFAULT_TOL) -> float:
    """Smallest component of ``y(t)``, ``y' = M(t) y``, ``y(0) = e_i``, over all ``i``.

    Sampled on ``samples`` points of ``(0, t_end]``; a positive result
    confirms that the flow of a matrix with positive off-diagonal entries
    keeps coordinate vectors strictly positive.
    """
    n = sys.dimension
    t_end = sys.period if t_end is None else float(t_end)
    tr = integrate(sys.matrix_field(n), 0.0, np.eye(n).ravel(), t_end, tol, tol)
    ts = np.linspace(0.0, t_end, samples + 1)[1:]
    return float(tr(ts).min())


@dataclass(frozen=True, eq=False)
class TuneResult:
    kappa: float
    system: PeriodicSystem
    phi: float


def tune_to_resonance(
    family: Callable[[float], PeriodicSystem],
    bracket: Sequence[float],
    tol: float = 1e-12,
    phi_tol: float = 1e-10,
) -> TuneResult:
    """Find ``κ`` with ``det(I - Z_κ(p)) = 0`` by bracketed root finding.

    The root is accepted when the smallest singular value of ``I - Z(p)``,
    relative to the largest, is at most ``phi_tol``.
    """
    lo, hi = float(bracket[0]), float(bracket[1])

    def phi(kappa: float) -> float:
        sys = family(kappa)
        zp = adjoint_fundamental(sys, sys.period, tol)
        return float(np.linalg.det(np.eye(sys.dimension) - zp))

    f_lo, f_hi = phi(lo), phi(hi)
    if f_lo == 0.0:
        return TuneResult(lo, family(lo), 0.0)
    if f_hi == 0.0:
        return TuneResult(hi, family(hi), 0.0)
    if np.sign(f_lo) == np.sign(f_hi):
        raise PreconditionError(f"det(I - Z(p)) does not change sign on [{lo}, {hi}]")
    kappa = scipy.optimize.brentq(phi, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)
    sys = family(kappa)
    defect = np.eye(sys.dimension) - adjoint_fundamental(sys, sys.period, tol)
    sv = np.linalg.svd(defect, compute_uv=False)
    # the determinant carries the other factors 1 - ζ_j, so judge by σ_min instead
    closeness = float(sv[-1] / max(1.0, sv[0]))
    if closeness > phi_tol:
        raise ConvergenceError(f"σ_min(I - Z(p)) = {closeness:.3g} (relative) at the root exceeds {phi_tol}",
                               closeness)
    return TuneResult(kappa, sys, float(np.linalg.det(defect)))
