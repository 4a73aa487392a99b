import numpy as np
import pytest

from aggrahull import gallery
from aggrahull.certificates import (emptiness_certificate, escape_bound, hull_is_rn,
                                    pdlc_witness, recession_direction, triple_pdlc_table)
from aggrahull.linalg import min_eig
from aggrahull.qform import QuadraticFunction, QuadraticSystem


def test_empty_ball_has_certificate():
    cert = emptiness_certificate(gallery.empty_ball(3))
    assert cert is not None
    assert np.allclose(cert.lam, [1.0])
    assert cert.margin == pytest.approx(1.0)


def test_nonempty_system_has_no_emptiness_certificate():
    assert emptiness_certificate(gallery.four_aggregations(2)) is None
    with pytest.raises(ValueError):
        emptiness_certificate(gallery.closed_pair(2))


def test_pdlc_known_witness_and_search():
    sys = gallery.four_aggregations(2)
    theta = np.array(gallery.FOUR_AGGREGATION_PDLC)
    assert min_eig(np.tensordot(theta, sys.Qs, axes=1)) > 0
    w = pdlc_witness(sys)
    assert w is not None and w.min_eig > 0
    assert np.linalg.norm(w.theta) == pytest.approx(1.0)
    assert min_eig(np.tensordot(w.theta, sys.Qs, axes=1)) == pytest.approx(w.min_eig)


def test_parallelogram_has_no_pdlc():
    assert pdlc_witness(gallery.parallelogram(3)) is None


def test_triple_table():
    table = triple_pdlc_table(gallery.three_spheres())
    assert (2, 0, 1) in table and len(table) == 1
    assert table.get((1, 2, 0)).min_eig > 0
    with pytest.raises(ValueError):
        triple_pdlc_table(gallery.closed_pair(2))


def test_recession_direction_for_concave_system():
    sys = QuadraticSystem((QuadraticFunction(-np.eye(2), np.zeros(2), 1.0),
                           QuadraticFunction(np.diag([-1.0, 0.5]), np.zeros(2), 0.0)))
    rec = recession_direction(sys)
    assert rec
    v = rec.witness.v
    assert all(v @ f.A @ v < 0 for f in sys)
    status = hull_is_rn(sys)
    assert status.value is True


def test_bounded_hull_is_not_rn():
    status = hull_is_rn(gallery.four_aggregations(2))
    assert status.value is False
    assert status.lam is not None


def test_escape_bound_rejects_non_recession_direction():
    sys = gallery.four_aggregations(2)
    with pytest.raises(ValueError):
        escape_bound(sys, np.zeros(2), np.array([1.0, 0.0]))


def test_escape_bound_example():
    sys = QuadraticSystem((QuadraticFunction(-np.eye(2), np.zeros(2), 4.0),))
    M = escape_bound(sys, np.zeros(2), np.array([0.0, 1.0]))
    # the roots are at |t| = 2; the bound adds a unit of slack
    assert M == pytest.approx(3.0)
