"""Seeded property checks shared by the hypothesis suites and the acceptance gate.

Each ``check_*`` function draws one random instance from ``seed`` and asserts
the property; it returns a small number describing the worst residual.
"""
from itertools import combinations

import numpy as np
from numpy.polynomial import polynomial as P

from aggrahull.certificates import PdlcWitness, TripleWitnessTable
from aggrahull.engine import improve, support_reduce
from aggrahull.fm import OpenPolyhedron, fm_project
from aggrahull.hhc import soc_map, soc_preimage
from aggrahull.linalg import inertia, pencil_det_poly
from aggrahull.qform import QuadraticFunction, QuadraticSystem
from aggrahull.special import diagonal_empty, diagonal_hull, diagonal_projection, diagonal_rn


def random_symmetric(rng, k, zeros=0):
    """Symmetric matrix with eigenvalues bounded away from zero except ``zeros`` exact zeros."""
    Q, _ = np.linalg.qr(rng.standard_normal((k, k)))
    ev = rng.uniform(0.2, 3.0, k) * rng.choice([-1.0, 1.0], k)
    ev[:zeros] = 0.0
    return (Q * ev) @ Q.T


def check_sylvester(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 8))
    Q = random_symmetric(rng, k, zeros=int(rng.integers(0, k)))
    U, _ = np.linalg.qr(rng.standard_normal((k, k)))
    V, _ = np.linalg.qr(rng.standard_normal((k, k)))
    Pm = U @ np.diag(rng.uniform(0.5, 2.0, k)) @ V
    before = inertia(Q)
    after = inertia(Pm.T @ Q @ Pm)
    assert before == after, (before, after)
    return 0.0


def check_pencil_residual(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 7))
    A = rng.standard_normal((k, k))
    B = rng.standard_normal((k, k))
    Q1, Q2 = A + A.T, B + B.T
    poly = pencil_det_poly(Q1, Q2)
    alphas = rng.uniform(0.0, 1.0, 20)
    direct = np.array([np.linalg.det(a * Q1 + (1 - a) * Q2) for a in alphas])
    scale = max(1.0, poly.scale)
    res = max(np.max(np.abs(poly(alphas) - direct)),
              np.max(np.abs(P.polyval(alphas, poly.coefficients) - direct))) / scale
    assert res <= 1e-8, res
    # every reported root is a root of the direct determinant
    for r in poly.values:
        d = abs(np.linalg.det(r * Q1 + (1 - r) * Q2))
        assert d <= 1e-8 * scale, (r, d)
    return res


def check_fm_multipliers(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    m = int(rng.integers(1, 5))
    A = rng.integers(-3, 4, (m, n)).astype(float)
    # keep the origin-ish orthant point feasible so the projection is nonempty
    x0 = rng.uniform(0.1, 1.0, n)
    b = A @ x0 + rng.uniform(0.1, 2.0, m)
    proj = fm_project(OpenPolyhedron(A, b, True))
    L = proj.multipliers
    assert np.all(L >= -1e-12)
    res = 0.0
    if len(L):
        res = max(np.max(np.abs(L @ A - proj.G)), np.max(np.abs(L @ b - proj.h)))
    assert res <= 1e-9, res
    # projected rows are valid: every y <= x with A x < b satisfies them
    X = x0 + rng.uniform(-1, 1, (200, n))
    X = X[np.all(X @ A.T < b, axis=1)]
    Y = X - rng.uniform(0, 1, X.shape)
    if len(Y) and len(proj.G):
        assert np.all(Y @ proj.G.T < proj.h + 1e-9)
    return res


def check_soc_roundtrip(seed, count=100):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 7))
    X = rng.standard_normal((count, n)) * rng.uniform(0.01, 10.0)
    worst = 0.0
    for x in X:
        y = soc_map(x)
        back = soc_map(soc_preimage(y))
        err = np.max(np.abs(back - y)) / max(1.0, np.max(np.abs(y)))
        worst = max(worst, err)
    assert worst <= 1e-10, worst
    return worst


def check_weyl_improve(seed):
    rng = np.random.default_rng(seed)
    k = int(rng.integers(2, 6))
    Qs = [random_symmetric(rng, k) for _ in range(2)]
    theta = np.append(rng.uniform(-1, 1, 2), rng.uniform(0.5, 1.5))
    G = rng.standard_normal((k, int(rng.integers(1, k + 1))))
    M = G @ G.T
    Qs.append((M - theta[0] * Qs[0] - theta[1] * Qs[1]) / theta[2])
    sys = QuadraticSystem(tuple(QuadraticFunction.from_matrix(Q) for Q in Qs))
    lam = np.maximum(-theta, 0.0) + rng.uniform(0.0, 1.0, 3)
    new = improve(sys, lam, theta)
    before = inertia(np.tensordot(lam, sys.Qs, axes=1)).neg
    after = inertia(np.tensordot(new, sys.Qs, axes=1)).neg
    assert after <= before, (before, after)
    return float(after - before)


def check_support_reduce(seed):
    """Forms ``P^T diag(a_i, b_i I) P`` with ``(a_i, b_i)`` on an arc avoiding the
    closed positive quadrant: no nonnegative combination is PSD, yet any two
    non-parallel forms span a positive definite one."""
    rng = np.random.default_rng(seed)
    m = int(rng.integers(3, 8))
    k = int(rng.integers(2, 6))
    ang = rng.uniform(0.6 * np.pi, 1.4 * np.pi, m)
    ab = np.column_stack([np.cos(ang), np.sin(ang)])
    Pm = np.linalg.qr(rng.standard_normal((k, k)))[0] @ np.diag(rng.uniform(0.5, 2.0, k))
    Qs = [Pm.T @ np.diag([a] + [b] * (k - 1)) @ Pm for a, b in ab]
    sys = QuadraticSystem(tuple(QuadraticFunction.from_matrix(Q) for Q in Qs))
    table = TripleWitnessTable()
    for t in combinations(range(m), 3):
        th = np.linalg.lstsq(ab[list(t)].T, np.ones(2), rcond=None)[0]
        table.witnesses[t] = PdlcWitness(th, float(np.linalg.eigvalsh(
            np.tensordot(th, sys.Qs[list(t)], axes=1))[0]))
    lam = rng.uniform(0.1, 1.0, m)
    red = support_reduce(sys, lam, table, seed=seed)
    assert red.steps <= m - 2, (red.steps, m)
    assert np.count_nonzero(red.lam) <= 2
    assert np.all(red.lam >= 0)
    return float(red.steps)


def random_diagonal_system(rng):
    n = int(rng.integers(1, 4))
    cons = [QuadraticFunction(np.eye(n), np.zeros(n), -float(rng.integers(1, 5)))]
    for _ in range(int(rng.integers(1, 4))):
        d = rng.integers(-2, 3, n).astype(float)
        cons.append(QuadraticFunction(np.diag(d), np.zeros(n), float(rng.integers(-2, 3))))
    return QuadraticSystem(tuple(cons))


def check_diagonal_equivalence(seed, points=10_000):
    """Membership in the aggregations equals membership of ``x*x`` in the projection."""
    rng = np.random.default_rng(seed)
    for _ in range(50):
        sys = random_diagonal_system(rng)
        if diagonal_empty(sys) is None and not diagonal_rn(sys):
            break
    else:
        sys = sys.subsystem([0])  # the ball alone always qualifies
    hull = diagonal_hull(sys)
    proj = diagonal_projection(sys)
    R = 2.0 * np.sqrt(max(1.0, -sys[0].c))
    X = rng.uniform(-R, R, (points, sys.n))
    in_aggs = hull.contains(X)
    in_proj = proj.contains(X * X)
    assert np.array_equal(in_aggs, in_proj), int(np.sum(in_aggs != in_proj))
    # S lies inside both
    S = X[sys.contains(X)]
    assert np.all(hull.contains(S))
    return 0.0


PROPERTIES = {
    "sylvester inertia invariance": check_sylvester,
    "pencil polynomial re-evaluation": check_pencil_residual,
    "FM multiplier soundness": check_fm_multipliers,
    "soc_preimage roundtrip": check_soc_roundtrip,
    "Weyl monotonicity in improve": check_weyl_improve,
    "support_reduce termination": check_support_reduce,
    "diagonal hull vs projection": check_diagonal_equivalence,
}
