import numpy as np
import pytest
from hypothesis import given, strategies as st

from aggrahull import gallery
from aggrahull.certificates import PdlcWitness, TripleWitnessTable
from aggrahull.engine import (MissingWitnessError, classify, component_labels, covers_space,
                              improve, is_good, pencil_analysis, support_reduce)
from aggrahull.qform import QuadraticFunction, QuadraticSystem


def test_classify_kinds():
    assert classify(np.eye(3)).kind == "psd"
    scc = classify(np.diag([1.0, 1.0, -1.0]))
    assert scc.kind == "one-negative"
    assert np.allclose(np.abs(scc.split_normal), [0, 0, 1])
    assert classify(np.diag([-1.0, -1.0, 1.0])).kind == "many-negative"


def test_two_sided_set_has_opposite_components():
    # -x^2 + 1 < 0 is |x| > 1
    scc = classify(np.diag([-1.0, 1.0]))
    lab = component_labels(scc, np.array([[2.0], [-2.0], [0.0]]))
    assert lab[0] == -lab[1] != 0
    assert lab[2] == 0
    with pytest.raises(ValueError):
        component_labels(classify(np.eye(2)), np.zeros((1, 1)))


def test_goodness_verdicts():
    sys = gallery.four_aggregations(2)
    X = np.random.default_rng(0).uniform(-3, 3, (20000, 2))
    S = X[sys.contains(X)]
    assert is_good(sys, [1.0, 0.0, 1.0], S).good
    assert is_good(sys, [0.0, 0.0, 1.0], S).status == "not-eligible"
    outside = QuadraticSystem((QuadraticFunction(-np.eye(1), np.zeros(1), 1.0),))
    Y = np.array([[2.0], [-3.0]])
    g = is_good(outside, [1.0], Y)
    assert g.status == "not-good" and len(g.witnesses) == 2
    assert is_good(gallery.empty_ball(2), [1.0], S).status == "psd-empty"


def test_pencil_analysis_four_aggregations():
    sys = gallery.four_aggregations(2)
    pa = pencil_analysis(sys, 0, 2)
    assert pa.gev_values == pytest.approx([0.5])
    assert pa.n_c >= 1
    with pytest.raises(ValueError):
        pencil_analysis(sys, 1, 1)


def _concave_case(rng, n, in_range):
    G = rng.standard_normal((n, int(rng.integers(1, n + 1))))
    A = -(G @ G.T)
    y = rng.standard_normal(n)
    b = A @ y
    if not in_range:
        K = np.linalg.svd(G.T)[2][G.shape[1]:]
        if len(K):
            b = b + K[0]
    c = float(rng.normal(0, 2))
    return QuadraticFunction(A, b, c), c - y @ A @ y


@given(st.integers(0, 2**31 - 1), st.integers(1, 4))
def test_covers_space_matches_closed_form(seed, n):
    rng = np.random.default_rng(seed)
    F, sup = _concave_case(rng, n, in_range=True)
    if abs(sup) > 1e-6:
        assert covers_space(F) == (sup < 0)
    if covers_space(F):
        X = rng.normal(0, 10, (200, n))
        assert np.all(F(X) < 0)
    G, _ = _concave_case(rng, n, in_range=False)
    if np.linalg.matrix_rank(G.A) < n:
        assert not covers_space(G)
    # any positive curvature direction makes F unbounded above
    H = QuadraticFunction(F.A + 2 * np.abs(np.linalg.eigvalsh(F.A)).max() * np.eye(n) + np.eye(n),
                          F.b, F.c)
    assert not covers_space(H)


def test_improve_checks_direction():
    sys = gallery.four_aggregations(2)
    theta = np.array(gallery.FOUR_AGGREGATION_PDLC)
    with pytest.raises(ValueError):
        improve(sys, [1.0, 1.0, 1.0], -theta)
    with pytest.raises(ValueError):
        improve(sys, [1.0, 1.0, 1.0], theta)  # leaves the orthant
    new = improve(sys, [8.0, 4.0, 16.0], theta)
    assert np.allclose(new, [1.0, 1.0, 1.0])


def test_support_reduce_example():
    rng = np.random.default_rng(3)
    Q1 = rng.standard_normal((3, 3))
    Q1 = Q1 + Q1.T
    Q2 = rng.standard_normal((3, 3))
    Q2 = Q2 + Q2.T
    Q3 = 0.5 * (Q1 + Q2 - np.eye(3))
    sys = QuadraticSystem(tuple(QuadraticFunction.from_matrix(Q) for Q in (Q1, Q2, Q3)))
    table = TripleWitnessTable({(0, 1, 2): PdlcWitness(np.array([1.0, 1.0, -2.0]), 1.0)})
    red = support_reduce(sys, [1.0, 1.0, 1.0], table)
    assert np.allclose(red.lam, [1.5, 1.5, 0.0])
    assert red.steps == 1
    with pytest.raises(MissingWitnessError):
        support_reduce(sys, [1.0, 1.0, 1.0], TripleWitnessTable())
