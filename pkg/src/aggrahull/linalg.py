"""Dense symmetric linear algebra for small matrices.

Eigen-decomposition (cyclic Jacobi, plus a LAPACK fast path), inertia,
determinant polynomials of matrix pencils with real-root isolation on
``[0, 1]``, Gram-Schmidt in a general inner product, and maximisation of
the smallest eigenvalue of a linear matrix family.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.polynomial import Chebyshev, Polynomial
from scipy.optimize import brentq, linprog

TAU_EIG = 1e-12
TAU_ZERO = 1e-8
TAU_ROOT = 1e-9
TAU_TOUCH = 1e-9
TAU_OPT = 1e-6
ROOT_MERGE = 1e-9


class ConvergenceError(RuntimeError):
    pass


@dataclass
class EigenResult:
    values: np.ndarray
    vectors: np.ndarray
    sweeps: int = 0


@dataclass(frozen=True)
class Inertia:
    neg: int
    zero: int
    pos: int

    def __iter__(self):
        return iter((self.neg, self.zero, self.pos))


def _as_symmetric(Q) -> np.ndarray:
    Q = np.asarray(Q, dtype=float)
    if Q.ndim != 2 or Q.shape[0] != Q.shape[1] or Q.shape[0] < 1:
        raise ValueError(f"expected a nonempty square matrix, got shape {Q.shape}")
    return 0.5 * (Q + Q.T)


def jacobi_eigen(Q, tol: float = TAU_EIG, max_sweeps: int = 40) -> EigenResult:
    """Cyclic Jacobi eigen-decomposition of a symmetric matrix.

    Sweeps over all off-diagonal pairs until the off-diagonal Frobenius norm
    drops below ``tol * ||Q||_F``.  Eigenvalues are returned in ascending order.
    """
    A = _as_symmetric(Q).copy()
    k = A.shape[0]
    V = np.eye(k)
    target = tol * max(np.linalg.norm(A), np.finfo(float).tiny)
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off <= target:
            break
        for p in range(k - 1):
            for q in range(p + 1, k):
                apq = A[p, q]
                if apq == 0.0:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.copysign(1.0, theta) / (abs(theta) + np.hypot(theta, 1.0))
                c = 1.0 / np.hypot(t, 1.0)
                s = t * c
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = c * Ap - s * Aq
                A[:, q] = s * Ap + c * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = c * Ap - s * Aq
                A[q, :] = s * Ap + c * Aq
                A[p, q] = A[q, p] = 0.0
                Vp, Vq = V[:, p].copy(), V[:, q].copy()
                V[:, p] = c * Vp - s * Vq
                V[:, q] = s * Vp + c * Vq
    else:
        off = np.linalg.norm(A - np.diag(np.diag(A)))
        if off > target:
            raise ConvergenceError(
                f"Jacobi did not converge in {max_sweeps} sweeps (off-norm {off:.3g})")
    vals = np.diag(A).copy()
    order = np.argsort(vals, kind="stable")
    return EigenResult(vals[order], V[:, order], sweeps)


def eigh(Q, method: str = "lapack") -> EigenResult:
    if method not in ("lapack", "jacobi"):
        raise ValueError(f"unknown eigen method {method!r}")
    if method == "jacobi":
        return jacobi_eigen(Q)
    vals, vecs = np.linalg.eigh(_as_symmetric(Q))
    return EigenResult(vals, vecs)


def min_eig(Q) -> float:
    return float(np.linalg.eigvalsh(_as_symmetric(Q))[0])


def inertia(Q, tau_zero: float = TAU_ZERO, method: str = "lapack") -> Inertia:
    """Counts of negative, zero and positive eigenvalues.

    An eigenvalue counts as zero when ``|mu| <= tau_zero * max(1, ||Q||_F)``.
    """
    Q = _as_symmetric(Q)
    vals = eigh(Q, method).values
    band = tau_zero * max(1.0, np.linalg.norm(Q))
    neg = int(np.sum(vals < -band))
    pos = int(np.sum(vals > band))
    return Inertia(neg, len(vals) - neg - pos, pos)


def determinant(M) -> float:
    return float(np.linalg.det(np.asarray(M, dtype=float)))


@dataclass(frozen=True)
class PencilRoot:
    value: float
    double: bool = False
    merged: bool = False


@dataclass
class PolyRealRoots:
    """``p(alpha) = det(alpha Q1 + (1 - alpha) Q2)`` and its roots in ``[0, 1]``.

    ``coefficients`` are in increasing powers of ``alpha``.
    """

    coefficients: np.ndarray
    roots: list = field(default_factory=list)
    interpolant: Chebyshev = None

    @property
    def roots_in_01(self) -> list:
        return [(r.value, r.double) for r in self.roots]

    @property
    def values(self) -> np.ndarray:
        return np.array([r.value for r in self.roots])

    @property
    def scale(self) -> float:
        return float(np.max(np.abs(self.coefficients))) if len(self.coefficients) else 0.0

    def __call__(self, alpha):
        return self.interpolant(alpha)


class SingularPencilError(ValueError):
    """``det(alpha Q1 + (1 - alpha) Q2)`` vanishes identically."""


def _bisect(fun, lo, hi, flo=None, tol=1e-15):
    """Bracketed root refinement (Brent's method, falls back to the midpoint)."""
    try:
        return brentq(fun, lo, hi, xtol=tol, rtol=4 * np.finfo(float).eps, maxiter=200)
    except ValueError:
        return 0.5 * (lo + hi)


def pencil_det_poly(Q1, Q2, grid: int = 2048, tau_root: float = TAU_ROOT,
                    tau_touch: float = TAU_TOUCH, merge_tol: float = ROOT_MERGE) -> PolyRealRoots:
    """Determinant polynomial of the pencil ``alpha Q1 + (1 - alpha) Q2`` and its roots in [0, 1].

    The polynomial has degree at most ``k`` (the matrix size); it is recovered
    by interpolation at ``k + 1`` Chebyshev nodes.  Simple roots come from
    sign changes on a uniform grid refined by bisection; roots of even
    multiplicity (tangential touches) from local minima of ``|p|`` refined as
    roots of ``p'``.  Roots closer than ``merge_tol`` are merged.
    """
    Q1 = _as_symmetric(Q1)
    Q2 = _as_symmetric(Q2)
    if Q1.shape != Q2.shape:
        raise ValueError("pencil matrices must have the same shape")
    k = Q1.shape[0]
    j = np.arange(k + 1)
    nodes = 0.5 + 0.5 * np.cos((2 * j + 1) * np.pi / (2 * (k + 1)))
    vals = np.array([np.linalg.det(a * Q1 + (1 - a) * Q2) for a in nodes])
    cheb = Chebyshev.fit(nodes, vals, deg=k, domain=[0.0, 1.0])
    coeffs = cheb.convert(kind=Polynomial, domain=[-1, 1], window=[-1, 1]).coef
    coeffs = np.concatenate([coeffs, np.zeros(k + 1 - len(coeffs))])
    scale = float(np.max(np.abs(coeffs)))
    entry_scale = max(np.max(np.abs(Q1)), np.max(np.abs(Q2)), 1e-300)
    if scale <= 1e-13 * entry_scale ** k:
        raise SingularPencilError("pencil singular everywhere")
    result = PolyRealRoots(coeffs, [], cheb)
    dcheb = cheb.deriv()
    zero_band = tau_root * scale
    touch_band = tau_touch * scale

    g = np.linspace(0.0, 1.0, grid)
    v = cheb(g)
    found = []  # (value, double)
    for end, val in ((0, v[0]), (grid - 1, v[-1])):
        if abs(val) <= zero_band:
            found.append((g[end], abs(dcheb(g[end])) <= touch_band))
    for i in range(grid - 1):
        a, b = v[i], v[i + 1]
        if a * b < 0:
            found.append((_bisect(cheb, g[i], g[i + 1], a), False))
        elif a == 0.0 and 0 < i:
            found.append((g[i], False))
    absv = np.abs(v)
    for i in range(1, grid - 1):
        if not (absv[i] <= absv[i - 1] and absv[i] <= absv[i + 1]):
            continue
        if v[i - 1] * v[i] < 0 or v[i] * v[i + 1] < 0:
            continue
        lo, hi = g[i - 1], g[i + 1]
        dlo, dhi = dcheb(lo), dcheb(hi)
        if dlo * dhi < 0:
            r = _bisect(dcheb, lo, hi, dlo)
        else:
            r = g[i]
        if abs(cheb(r)) <= touch_band:
            found.append((r, True))

    found.sort()
    roots: list[PencilRoot] = []
    for r, double in found:
        if roots and r - roots[-1].value <= merge_tol:
            prev = roots[-1]
            roots[-1] = PencilRoot(0.5 * (prev.value + r), prev.double or double, True)
        else:
            roots.append(PencilRoot(float(r), bool(double)))
    # a perturbed double root may surface as two simple roots a hair apart
    cleaned: list[PencilRoot] = []
    for r in roots:
        if cleaned and not cleaned[-1].double and not r.double and r.value - cleaned[-1].value < 1e-6:
            lo, hi = cleaned[-1].value, r.value
            dlo, dhi = dcheb(lo), dcheb(hi)
            mid = _bisect(dcheb, lo, hi, dlo) if dlo * dhi < 0 else 0.5 * (lo + hi)
            if abs(cheb(mid)) <= touch_band:
                cleaned[-1] = PencilRoot(float(mid), True, True)
                continue
        cleaned.append(r)
    result.roots = [PencilRoot(min(max(r.value, 0.0), 1.0), r.double, r.merged) for r in cleaned]
    return result


def b_orthonormal_basis(B, V, tol: float = 1e-12) -> list:
    """Gram-Schmidt of the vectors ``V`` in the inner product ``<x, y> = x^T B y``."""
    B = _as_symmetric(B)
    if inertia(B).pos != B.shape[0]:
        raise np.linalg.LinAlgError("inner-product matrix is not positive definite")
    out = []
    for v in V:
        u = np.array(v, dtype=float)
        norm0 = np.sqrt(u @ B @ u)
        # two passes of modified Gram-Schmidt keep orthogonality at 1e-15 level
        for _ in range(2):
            for w in out:
                u = u - (w @ B @ u) * w
        nrm = np.sqrt(max(u @ B @ u, 0.0))
        if nrm <= tol * max(norm0, 1.0):
            raise np.linalg.LinAlgError("vectors are linearly dependent")
        out.append(u / nrm)
    return out


@dataclass
class MinEigResult:
    value: float
    argument: np.ndarray
    upper_bound: float = np.inf
    iterations: int = 0


def project_simplex(W: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row onto ``{w >= 0, sum w = 1}``."""
    W = np.atleast_2d(W)
    m = W.shape[1]
    U = -np.sort(-W, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    idx = np.arange(1, m + 1)
    cond = U - css / idx > 0
    rho = m - 1 - np.argmax(cond[:, ::-1], axis=1)
    tau = css[np.arange(W.shape[0]), rho] / (rho + 1)
    return np.maximum(W - tau[:, None], 0.0)


def _project_ball(W: np.ndarray) -> np.ndarray:
    nrm = np.linalg.norm(W, axis=1, keepdims=True)
    return W / np.maximum(nrm, 1.0)


def max_min_eig(Qs, feasible: str = "simplex", iters: int = 5000, restarts: int = 20,
                seed: int = 0, eta0: float = None, tol: float = TAU_OPT,
                polish: bool = True, polish_iters: int = 300,
                stop_at: float = None) -> MinEigResult:
    """Maximise ``lambda_min(sum_i w_i Q_i)`` over the simplex or the unit ball.

    Projected supergradient ascent (supergradient ``(v^T Q_i v)_i`` from a
    bottom eigenvector ``v``, steps ``eta0 / sqrt(t)``) run from ``restarts``
    starting points in parallel.  The eigenvectors visited along the way are
    reused as cutting planes of the concave objective in a Kelley-type
    polishing phase, which also yields the returned ``upper_bound``.
    With ``stop_at`` the search ends (unpolished) once that value is reached.
    """
    Qs = np.asarray(Qs, dtype=float)
    if Qs.ndim != 3 or len(Qs) == 0:
        raise ValueError("expected a nonempty stack of square matrices")
    Qs = 0.5 * (Qs + np.transpose(Qs, (0, 2, 1)))
    m = Qs.shape[0]
    if feasible not in ("simplex", "ball"):
        raise ValueError(f"unknown feasible set {feasible!r}")
    rng = np.random.default_rng(seed)
    simplex = feasible == "simplex"
    if simplex:
        W = rng.dirichlet(np.ones(m), size=restarts)
        W[0] = 1.0 / m
        proj = project_simplex
        diam = np.sqrt(2.0)
    else:
        W = rng.standard_normal((restarts, m))
        W /= np.linalg.norm(W, axis=1, keepdims=True)
        proj = _project_ball
        diam = 2.0
    if eta0 is None:
        eta0 = 0.5 * diam

    def lmin_and_cut(W):
        M = np.einsum("ri,ijk->rjk", W, Qs)
        vals, vecs = np.linalg.eigh(M)
        v = vecs[:, :, 0]
        return vals[:, 0], np.einsum("rj,ijk,rk->ri", v, Qs, v)

    best_val = -np.inf
    best_arg = W[0].copy()
    if not simplex:
        best_val, best_arg = 0.0, np.zeros(m)
    cuts = []
    for t in range(1, iters + 1):
        lm, G = lmin_and_cut(W)
        i = int(np.argmax(lm))
        if lm[i] > best_val:
            best_val, best_arg = float(lm[i]), W[i].copy()
        if stop_at is not None and best_val >= stop_at:
            return MinEigResult(best_val, best_arg, np.inf, t)
        if t % 25 == 1 or t == iters:
            cuts.append(G)
        gn = np.linalg.norm(G, axis=1, keepdims=True)
        W = proj(W + (eta0 / np.sqrt(t)) * G / np.maximum(gn, 1e-300))
    ub = np.inf
    n_polish = 0
    if polish:
        best_val, best_arg, ub, n_polish = _kelley(Qs, np.concatenate(cuts), simplex,
                                                   best_val, best_arg, tol, polish_iters)
    return MinEigResult(float(best_val), best_arg, float(ub), iters + n_polish)


def _kelley(Qs, cuts, simplex, best_val, best_arg, tol, max_iter):
    m = Qs.shape[0]
    cuts = [c for c in np.unique(np.round(cuts, 14), axis=0)]
    ball_cuts = []
    ub = np.inf
    c_obj = np.zeros(m + 1)
    c_obj[-1] = -1.0
    bounds = [(0, None) if simplex else (-1, 1)] * m + [(None, None)]
    it = 0
    for it in range(1, max_iter + 1):
        G = np.array(cuts)
        A_ub = np.hstack([-G, np.ones((len(G), 1))])
        b_ub = np.zeros(len(G))
        if ball_cuts:
            U = np.array(ball_cuts)
            A_ub = np.vstack([A_ub, np.hstack([U, np.zeros((len(U), 1))])])
            b_ub = np.concatenate([b_ub, np.ones(len(U))])
        kw = {}
        if simplex:
            kw = dict(A_eq=np.concatenate([np.ones(m), [0.0]])[None, :], b_eq=[1.0])
        # the cut model is unbounded above only before any cut exists
        res = linprog(c_obj, A_ub=A_ub, b_ub=b_ub, bounds=bounds, method="highs", **kw)
        if res.status != 0:
            break
        w = res.x[:m]
        ub = min(ub, float(res.x[-1]))
        if not simplex:
            nw = np.linalg.norm(w)
            if nw > 1.0 + 1e-12:
                ball_cuts.append(w / nw)
                w = w / nw
        M = np.tensordot(w, Qs, axes=1)
        vals, vecs = np.linalg.eigh(M)
        if vals[0] > best_val:
            best_val, best_arg = float(vals[0]), w.copy()
        band = vals[0] + 1e-9 * max(1.0, abs(vals[0]))
        for col in range(vecs.shape[1]):
            if vals[col] > band:
                break
            v = vecs[:, col]
            cuts.append(np.einsum("j,ijk,k->i", v, Qs, v))
        if ub - best_val <= tol:
            break
    return best_val, best_arg, ub, it
