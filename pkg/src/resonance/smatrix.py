"""Small dense real linear algebra.

Thin, tolerance-explicit wrappers over LAPACK: LU solves with an explicit
singularity test, eigenvalues clustered into multiplicities, SVD null
spaces and a Fredholm range-membership test.
"""

from __future__ import annotations

import warnings

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import NumericalError, SingularMatrixError

__all__ = [
    "EIG_CLUSTER_TOL",
    "UNIT_CIRCLE_TOL",
    "RANK_TOL",
    "EigenCluster",
    "SpectralData",
    "RangeTest",
    "solve",
    "eigenvalues",
    "null_space",
    "range_membership",
    "min_norm_solution",
]

EIG_CLUSTER_TOL = 1e-7
UNIT_CIRCLE_TOL = 1e-7
RANK_TOL = 1e-8


def _as_matrix(m) -> np.ndarray:
    a = np.array(m, dtype=float)
    if a.ndim != 2 or 0 in a.shape:
        raise ValueError(f"expected a non-empty 2-D matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValueError("matrix has non-finite entries")
    return a


def solve(m, b) -> np.ndarray:
    """Solve ``m x = b`` by LU with partial pivoting.

    Raises :class:`SingularMatrixError` when a pivot falls below
    ``1e-13 * ||m||``.
    """
    a = _as_matrix(m)
    if a.shape[0] != a.shape[1]:
        raise ValueError("solve needs a square matrix")
    rhs = np.asarray(b, dtype=float)
    norm = np.linalg.norm(a, np.inf)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)  # reported below instead
        lu, piv = scipy.linalg.lu_factor(a, check_finite=False)
    if norm == 0 or np.min(np.abs(np.diag(lu))) < 1e-13 * norm:
        raise SingularMatrixError("matrix is singular to working precision")
    return scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)


@dataclass(frozen=True)
class EigenCluster:
    """One distinct eigenvalue with its multiplicities."""

    value: complex
    algebraic: int
    geometric: int
    on_unit_circle: bool

    @property
    def diagonal(self) -> bool:
        """True when the Jordan blocks of this eigenvalue are all 1x1."""
        return self.geometric == self.algebraic


@dataclass(frozen=True)
class SpectralData:
    eigenvalues: np.ndarray
    clusters: tuple[EigenCluster, ...]
    cluster_tol: float
    rank_tol: float

    @property
    def spectral_radius(self) -> float:
        return float(np.max(np.abs(self.eigenvalues)))

    def unit_circle(self) -> tuple[EigenCluster, ...]:
        return tuple(c for c in self.clusters if c.on_unit_circle)

    def cluster_at(self, value: complex, tol: float | None = None) -> EigenCluster | None:
        tol = self.cluster_tol if tol is None else tol
        best = min(self.clusters, key=lambda c: abs(c.value - value))
        return best if abs(best.value - value) <= tol else None


def _rank(a: np.ndarray, tol: float) -> int:
    s = np.linalg.svd(a, compute_uv=False)
    return int(np.sum(s > tol))


def eigenvalues(
    m,
    cluster_tol: float = EIG_CLUSTER_TOL,
    circle_tol: float = UNIT_CIRCLE_TOL,
    rank_tol: float = RANK_TOL,
) -> SpectralData:
    """Eigenvalues of a real square matrix with multiplicity structure.

    Eigenvalues closer than ``cluster_tol * max(1, ||m||)`` form one
    cluster; the geometric multiplicity of a cluster is the rank deficiency
    of ``m - λI`` at relative tolerance ``rank_tol``.
    """
    a = _as_matrix(m)
    n = a.shape[0]
    if n != a.shape[1]:
        raise ValueError("eigenvalues need a square matrix")
    try:
        lam = np.linalg.eigvals(a)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"QR iteration did not converge: {exc}") from None
    lam = np.asarray(lam, dtype=complex)
    norm = max(1.0, float(np.linalg.norm(a, 2)))
    eps = cluster_tol * norm

    # single-linkage clustering
    unassigned = list(range(n))
    groups: list[list[int]] = []
    while unassigned:
        group = [unassigned.pop(0)]
        grew = True
        while grew:
            grew = False
            for j in list(unassigned):
                if any(abs(lam[j] - lam[i]) <= eps for i in group):
                    group.append(j)
                    unassigned.remove(j)
                    grew = True
        groups.append(group)

    clusters = []
    for group in groups:
        centre = complex(np.mean(lam[group]))
        if abs(centre.imag) <= eps:
            centre = complex(centre.real, 0.0)
            shifted = a - centre.real * np.eye(n)
        else:
            shifted = a.astype(complex) - centre * np.eye(n)
        geo = n - _rank(shifted, rank_tol * norm)
        alg = len(group)
        geo = max(1, min(geo, alg))
        on_circle = abs(abs(centre) - 1.0) <= circle_tol
        clusters.append(EigenCluster(centre, alg, geo, on_circle))
    clusters.sort(key=lambda c: (-abs(c.value), -c.value.real, -c.value.imag))
    return SpectralData(lam, tuple(clusters), eps, rank_tol)


def null_space(m, tol: float = RANK_TOL, scale: float | None = None) -> np.ndarray:
    """Orthonormal basis (columns) of the kernel of ``m``.

    Singular directions are those with singular value at most
    ``tol * scale``; ``scale`` defaults to the largest singular value.  A
    zero matrix has the whole space as kernel.
    """
    a = _as_matrix(m)
    u, s, vt = np.linalg.svd(a)
    ncols = a.shape[1]
    ref = (s[0] if s.size else 0.0) if scale is None else scale
    cutoff = tol * ref
    rank = int(np.sum(s > cutoff)) if ref > 0 else 0
    basis = vt[rank:].T.copy()
    return basis.reshape(ncols, ncols - rank)


def min_norm_solution(m, b, tol: float = RANK_TOL, scale: float | None = None) -> np.ndarray:
    """Minimum-norm least-squares solution with the same rank cutoff as :func:`null_space`."""
    a = _as_matrix(m)
    u, s, vt = np.linalg.svd(a)
    ref = (s[0] if s.size else 0.0) if scale is None else scale
    keep = s > tol * ref if ref > 0 else np.zeros_like(s, dtype=bool)
    coef = (u[:, : s.size].T @ np.asarray(b, dtype=float))[keep] / s[keep]
    return vt[: s.size][keep].T @ coef


@dataclass(frozen=True)
class RangeTest:
    in_range: bool
    defect: float
    cokernel: np.ndarray = field(repr=False)


def range_membership(
    m, b, tol: float = 1e-8, rank_tol: float = RANK_TOL, scale: float | None = None
) -> RangeTest:
    """Fredholm test: is ``b`` in the range of ``m``?

    ``defect = ||P b|| / max(||b||, 1)`` where ``P`` projects onto the
    null space of ``m.T``; ``b`` is in the range when ``defect <= tol``.
    """
    a = _as_matrix(m)
    vec = np.asarray(b, dtype=float)
    cok = null_space(a.T, rank_tol, scale)
    proj = cok @ (cok.T @ vec) if cok.shape[1] else np.zeros_like(vec)
    defect = float(np.linalg.norm(proj) / max(np.linalg.norm(vec), 1.0))
    return RangeTest(defect <= tol, defect, cok)
