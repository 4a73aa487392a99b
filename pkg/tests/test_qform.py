import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st

from aggrahull.qform import (AsymmetryWarning, QuadraticFunction, QuadraticSystem, aggregate,
                             change_basis, check_weights, combine, detect_diagonal,
                             detect_sphere_structure, homogenize, hyperplane_basis,
                             restrict_to_hyperplane)
from aggrahull import gallery


def random_function(rng, n):
    A = rng.standard_normal((n, n))
    return QuadraticFunction(A + A.T, rng.standard_normal(n), rng.standard_normal())


@given(st.integers(0, 2**31 - 1), st.integers(1, 5))
def test_homogenization_matches_evaluation(seed, n):
    rng = np.random.default_rng(seed)
    f = random_function(rng, n)
    X = rng.standard_normal((20, n))
    Z = np.hstack([X, np.ones((20, 1))])
    hom = np.einsum("ri,ij,rj->r", Z, homogenize(f), Z)
    assert np.allclose(f(X), hom, rtol=1e-12, atol=1e-10)


def test_linear_coefficient_is_halved():
    f = QuadraticFunction.from_linear(np.eye(2), [4.0, -2.0], 1.0)
    assert np.allclose(f.b, [2.0, -1.0])
    # x^T x + 4 x1 - 2 x2 + 1 at (1, 1)
    assert f([1.0, 1.0]) == pytest.approx(1 + 1 + 4 - 2 + 1)


def test_asymmetric_input_warns_and_symmetrizes():
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        f = QuadraticFunction(np.array([[1.0, 1.0], [0.0, 1.0]]), np.zeros(2), 0.0)
    assert any(issubclass(x.category, AsymmetryWarning) for x in w)
    assert np.allclose(f.A, [[1.0, 0.5], [0.5, 1.0]])


def test_dimension_mismatch_is_rejected():
    with pytest.raises(ValueError):
        QuadraticFunction(np.eye(2), np.zeros(3), 0.0)
    f = QuadraticFunction(np.eye(2), np.zeros(2), 0.0)
    g = QuadraticFunction(np.eye(3), np.zeros(3), 0.0)
    with pytest.raises(ValueError):
        QuadraticSystem((f, g))
    with pytest.raises(ValueError):
        f([1.0, 2.0, 3.0])


def test_weights_must_be_nonnegative():
    sys = gallery.four_aggregations(2)
    with pytest.raises(ValueError):
        check_weights([1.0, -1.0, 0.0], 3)
    with pytest.raises(ValueError):
        aggregate(sys, [1.0, 1.0])
    F = aggregate(sys, [0.0, 1.0, 1.0])
    G = sys[1] + sys[2]
    assert F.allclose(G)
    # combine allows signed coefficients
    H = combine(sys, [1.0, -1.0, 0.0])
    assert H.allclose(sys[0] + (-1.0) * sys[1])


def test_system_values_and_contains():
    sys = gallery.four_aggregations(3)
    rng = np.random.default_rng(0)
    X = rng.standard_normal((50, 3))
    V = sys.values(X)
    for k, f in enumerate(sys):
        assert np.allclose(V[:, k], f(X))
    assert np.array_equal(sys.contains(X), np.all(V < 0, axis=1))


def test_structure_detection():
    assert detect_sphere_structure(gallery.three_spheres()).N == (2,)
    assert detect_sphere_structure(gallery.four_aggregations(2)) is None
    st_ = detect_sphere_structure(gallery.orthant_outside_ball(3))
    assert st_.N == (0,) and st_.Z == (1, 2, 3) and st_.P == ()
    assert detect_diagonal(gallery.disk())
    assert not detect_diagonal(gallery.closed_pair())


def test_hyperplane_restriction():
    a = np.array([1.0, 1.0, -1.0, 0.0])
    W = hyperplane_basis(a)
    assert W.shape == (4, 3)
    assert np.allclose(a @ W, 0.0)
    assert np.allclose(W.T @ W, np.eye(3))
    R = restrict_to_hyperplane(np.eye(4), W)
    assert np.allclose(R, np.eye(3))
    with pytest.raises(ValueError):
        restrict_to_hyperplane(np.eye(4), W[:, :2])
    with pytest.raises(ValueError):
        hyperplane_basis(np.zeros(3))


def test_change_basis_rejects_singular():
    with pytest.raises(np.linalg.LinAlgError):
        change_basis(np.eye(2), np.ones((2, 2)))
    P = np.array([[2.0, 1.0], [0.0, 1.0]])
    assert np.allclose(change_basis(np.eye(2), P), P.T @ P)
