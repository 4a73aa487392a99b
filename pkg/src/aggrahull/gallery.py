"""Reference systems with known hulls, used by tests, demos and fixtures."""
from __future__ import annotations

import numpy as np

from .qform import QuadraticFunction, QuadraticSystem


def _f(A, b, c, strict=True):
    return QuadraticFunction(np.asarray(A, float), np.asarray(b, float), c, strict)


def system_from_forms(Qs, strict=True) -> QuadraticSystem:
    """Treat each ``k x k`` form as a homogenized matrix of a constraint on ``R^(k-1)``."""
    return QuadraticSystem(tuple(QuadraticFunction.from_matrix(Q, strict) for Q in Qs))


def four_aggregations(n: int = 2, strict: bool = True) -> QuadraticSystem:
    """Three constraints whose hull needs four aggregations.

    ``f1 = -x1^2 + 1 + |x'|^2``, ``f2 = x1^2 + 5 x1 - 4 + |x'|^2``,
    ``f3 = -x1 - |x'|^2`` with ``x' = (x2, ..., xn)``.
    The hull is ``{f1 < 0, f2 < 0, f1 + f3 < 0, f2 + f3 < 0}``.
    """
    rest = np.eye(n)
    rest[0, 0] = 0.0
    e1 = np.zeros(n)
    e1[0] = 1.0
    A1 = rest.copy()
    A1[0, 0] = -1.0
    A2 = np.eye(n)
    return QuadraticSystem((
        _f(A1, np.zeros(n), 1.0, strict),
        _f(A2, 2.5 * e1, -4.0, strict),
        _f(-rest, -0.5 * e1, 0.0, strict),
    ))


FOUR_AGGREGATION_WEIGHTS = [(1, 0, 0), (0, 1, 0), (1, 0, 1), (0, 1, 1)]
FOUR_AGGREGATION_PDLC = (-7.0, -3.0, -15.0)


def closed_pair(n: int = 2, strict: bool = False) -> QuadraticSystem:
    """``f1 = -x1^2 + x1``, ``f2 = |x|^2 - 1``.

    With closed inequalities the solution set is the closed half ball plus the
    isolated point ``e1``; the interior of its closed hull is
    ``{f2 < 0, 2 f1 + f2 < 0}``.
    """
    e1 = np.zeros(n)
    e1[0] = 1.0
    A1 = np.zeros((n, n))
    A1[0, 0] = -1.0
    return QuadraticSystem((_f(A1, 0.5 * e1, 0.0, strict), _f(np.eye(n), np.zeros(n), -1.0, strict)))


def three_spheres() -> QuadraticSystem:
    """Two balls and a ball complement in ``R^3``; PDLC via ``theta = (-1, -1, -3)``."""
    e3 = np.array([0.0, 0.0, 1.0])
    I = np.eye(3)
    return QuadraticSystem((_f(I, -e3, -1.0), _f(I, e3, -4.0), _f(-I, np.zeros(3), 1.0)))


THREE_SPHERES_PDLC = (-1.0, -1.0, -3.0)


def parallelogram(n: int = 3) -> QuadraticSystem:
    """``f1 = x1^2 - x2^2``, ``f2 = x1 x2``, ``f3 = -1 - f1 - f2 + sum_{i>=3} xi^2``.

    Hidden convexity holds but PDLC fails; the only good aggregation is
    ``f1 + f2 + f3`` while the true hull is
    ``{x2^2 < 1 - r, (2 x1 + x2)^2 < 1 - r}`` with ``r = sum_{i>=3} xi^2``.
    """
    if n < 3:
        raise ValueError("needs n >= 3")
    A1 = np.zeros((n, n))
    A1[0, 0], A1[1, 1] = 1.0, -1.0
    A2 = np.zeros((n, n))
    A2[0, 1] = A2[1, 0] = 0.5
    tail = np.diag([0.0, 0.0] + [1.0] * (n - 2))
    z = np.zeros(n)
    return QuadraticSystem((_f(A1, z, 0.0), _f(A2, z, 0.0), _f(-A1 - A2 + tail, z, -1.0)))


def parallelogram_hull(n: int = 3) -> QuadraticSystem:
    """The true hull of :func:`parallelogram` as two quadratic inequalities."""
    tail = np.diag([0.0, 0.0] + [1.0] * (n - 2))
    u = np.zeros(n)
    u[1] = 1.0
    v = np.zeros(n)
    v[0], v[1] = 2.0, 1.0
    z = np.zeros(n)
    return QuadraticSystem((_f(np.outer(u, u) + tail, z, -1.0), _f(np.outer(v, v) + tail, z, -1.0)))


def orthant_outside_ball(n: int = 2) -> QuadraticSystem:
    """``f0 = 1 - |x|^2`` and ``fi = -xi``: the hull ``{x > 0, sum x > 1}`` is not
    reachable by good aggregations, which only give the open orthant."""
    cons = [_f(-np.eye(n), np.zeros(n), 1.0)]
    for i in range(n):
        b = np.zeros(n)
        b[i] = -0.5
        cons.append(_f(np.zeros((n, n)), b, 0.0))
    return QuadraticSystem(tuple(cons))


def orthant_hints(x, eps: float = None) -> np.ndarray:
    """Points ``eps * 1 + s * e_i`` of :func:`orthant_outside_ball` whose
    convex combination is ``x`` (requires ``x > 0`` and ``sum x > 1``)."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    if eps is None:
        eps = 0.5 * min(np.min(x), (np.sum(x) - 1.0) / n)
    y = x - eps
    s = y.sum()
    return eps + s * np.eye(n)


def orthant_weights(x, eps: float = None) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = len(x)
    if eps is None:
        eps = 0.5 * min(np.min(x), (np.sum(x) - 1.0) / n)
    y = x - eps
    return y / y.sum()


SEPARABLE_FORMS = np.array([
    np.diag([1.0, -1.0, -1.0]),
    np.diag([-1.0, 1.0, -1.0]),
    np.diag([-1.0, -1.0, 1.0]),
])


def separable() -> QuadraticSystem:
    """Three diagonal forms on ``R^3`` (no linear or constant terms)."""
    return QuadraticSystem(tuple(_f(D, np.zeros(3), 0.0) for D in SEPARABLE_FORMS))


SEPARABLE_NORMAL = np.array([1.0, 1.0, -1.0, 0.0])
SEPARABLE_PAIR = (np.array([1.0, 0.0, 1.0, 0.0]), np.array([0.0, 1.0, 1.0, 0.0]))


def disk() -> QuadraticSystem:
    """``x1^2 + x2^2 < 1``, ``x1^2 > 0``, ``x2^2 > 0``: the disk minus the axes."""
    return QuadraticSystem((
        _f(np.eye(2), np.zeros(2), -1.0),
        _f(np.diag([-1.0, 0.0]), np.zeros(2), 0.0),
        _f(np.diag([0.0, -1.0]), np.zeros(2), 0.0),
    ))


def empty_ball(n: int = 2) -> QuadraticSystem:
    """``|x|^2 + 1 < 0``: empty."""
    return QuadraticSystem((_f(np.eye(n), np.zeros(n), 1.0),))


def linear_factor_family(N: int = 5, m: int = 2, seed: int = 0):
    """Forms ``f0 > 0`` and ``fi = l(x) li(x)`` on ``R^N``, ``N > m + 1``.

    Returns the stacked forms ``(f0, f1, ..., fm)``.
    """
    rng = np.random.default_rng(seed)
    M = rng.standard_normal((N, N))
    f0 = M @ M.T + N * np.eye(N)
    ell = rng.standard_normal(N)
    forms = [f0]
    for _ in range(m):
        li = rng.standard_normal(N)
        forms.append(0.5 * (np.outer(ell, li) + np.outer(li, ell)))
    return np.array(forms)
