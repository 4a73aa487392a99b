import warnings

import numpy as np
import pytest

from aggrahull import gallery
from aggrahull.qform import PreconditionError, QuadraticFunction, QuadraticSystem
from aggrahull.special import (closed_hull, diagonal_empty, diagonal_hull, diagonal_rn,
                               span_dimension, sphere_hull, sphere_omega, sphere_rn_test,
                               zero_aggregation)


def test_three_spheres_candidates():
    hull = sphere_hull(gallery.three_spheres())
    W = hull.weights
    expected = [(1, 0, 0), (0, 1, 0), (1, 0, 1), (0, 1, 1)]
    assert sorted(map(tuple, (W / W.sum(axis=1, keepdims=True) * np.array([1, 1, 1])).round(9))) \
        == sorted(tuple(np.array(e) / sum(e)) for e in expected)
    assert span_dimension(gallery.three_spheres()) == 3


def test_sphere_hull_rejects_general_systems():
    with pytest.raises(ValueError):
        sphere_hull(gallery.parallelogram(3))


def test_sphere_omega_and_rn():
    sys = gallery.three_spheres()
    om = sphere_omega(sys)
    assert om.contains([1.0, 0.0, 1.0])
    assert not om.contains([0.0, 0.0, 1.0])
    assert not om.contains([1.0, -1.0, 0.0])
    assert sphere_rn_test(sys)
    outside = QuadraticSystem((QuadraticFunction(-np.eye(2), np.zeros(2), 1.0),))
    assert not sphere_rn_test(outside)


def test_diagonal_preconditions():
    with pytest.raises(ValueError):
        diagonal_hull(gallery.closed_pair(2))
    with pytest.raises(PreconditionError):
        diagonal_hull(gallery.empty_ball(2))
    assert diagonal_empty(gallery.empty_ball(2)) is not None
    saddle = QuadraticSystem((QuadraticFunction(np.diag([1.0, -1.0]), np.zeros(2), 0.0),))
    assert diagonal_rn(saddle)
    with pytest.raises(PreconditionError):
        diagonal_hull(saddle)


def test_zero_aggregation():
    f = QuadraticFunction(np.eye(2), np.zeros(2), -1.0, strict=False)
    g = QuadraticFunction(-np.eye(2), np.zeros(2), 1.0, strict=False)
    lam = zero_aggregation(QuadraticSystem((f, g)))
    assert lam is not None and np.allclose(lam, [0.5, 0.5])
    assert zero_aggregation(gallery.closed_pair(2)) is None
    with pytest.raises(PreconditionError):
        closed_hull(QuadraticSystem((f, g)))


def test_closed_hull_needs_closed_rows():
    with pytest.raises(ValueError):
        closed_hull(gallery.four_aggregations(2))


def test_sphere_hull_warns_without_pdlc():
    # two unit balls and a ball complement with n = 2: span 3 > n
    sys = QuadraticSystem((
        QuadraticFunction(np.eye(2), np.array([-1.0, 0.0]), -1.0),
        QuadraticFunction(np.eye(2), np.array([1.0, 0.0]), -1.0),
        QuadraticFunction(np.eye(2), np.array([0.0, 1.0]), -1.0),
        QuadraticFunction(-np.eye(2), np.zeros(2), 0.25),
    ))
    with warnings.catch_warnings(record=True) as w:
        warnings.simplefilter("always")
        hull = sphere_hull(sys)
    assert hull.notes and w
