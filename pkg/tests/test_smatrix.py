import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from resonance.errors import SingularMatrixError
from resonance.smatrix import eigenvalues, min_norm_solution, null_space, range_membership, solve

finite = st.floats(-5, 5, allow_nan=False, allow_infinity=False, allow_subnormal=False)


def test_solve_and_singular_detection():
    a = np.array([[2.0, 1.0], [1.0, 3.0]])
    assert np.allclose(a @ solve(a, [1.0, 2.0]), [1.0, 2.0])
    with pytest.raises(SingularMatrixError):
        solve([[1.0, 2.0], [2.0, 4.0]], [1.0, 0.0])


def test_jordan_block_is_not_diagonal():
    spec = eigenvalues([[1.0, 1.0], [0.0, 1.0]])
    (cluster,) = spec.clusters
    assert cluster.algebraic == 2 and cluster.geometric == 1 and not cluster.diagonal
    assert cluster.on_unit_circle


def test_identity_is_diagonal():
    spec = eigenvalues(np.eye(3))
    assert spec.clusters[0].algebraic == 3 and spec.clusters[0].diagonal


def test_rotation_has_conjugate_pair_on_circle():
    c, s = np.cos(0.3), np.sin(0.3)
    spec = eigenvalues([[c, -s], [s, c]])
    assert len(spec.unit_circle()) == 2
    assert spec.spectral_radius == pytest.approx(1.0)


def test_range_membership_of_singular_matrix():
    m = np.array([[0.0, 0.0], [0.0, 1.0]])
    assert range_membership(m, [0.0, 5.0]).in_range
    miss = range_membership(m, [1.0, 0.0])
    assert not miss.in_range and miss.defect == pytest.approx(1.0)


@pytest.mark.property
@settings(max_examples=80, deadline=None)
@given(arrays(float, (4, 4), elements=finite), st.integers(0, 3))
def test_rank_nullity(a, drop):
    # zero out some rows to force a kernel
    a = a.copy()
    a[:drop] = 0.0
    k = null_space(a, 1e-10)
    rank = np.linalg.matrix_rank(a, tol=1e-10 * max(np.linalg.norm(a, 2), 1e-300))
    assert k.shape[1] + rank == 4
    if k.shape[1]:
        assert np.allclose(k.T @ k, np.eye(k.shape[1]), atol=1e-10)
        assert np.max(np.abs(a @ k)) <= 1e-8 * max(1.0, np.linalg.norm(a, 2))


@pytest.mark.property
@settings(max_examples=80, deadline=None)
@given(arrays(float, (3, 3), elements=finite), arrays(float, 3, elements=finite))
def test_range_test_agrees_with_least_squares(a, x):
    b = a @ x  # always in range
    assert range_membership(a, b, 1e-8, 1e-10).in_range or np.linalg.norm(b) < 1e-12
    sol = min_norm_solution(a, b, 1e-10)
    assert np.allclose(a @ sol, b, atol=1e-7 * max(1.0, np.linalg.norm(b)))
