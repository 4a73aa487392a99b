"""Hidden (hyperplane) convexity of quadratic maps.

Structural recognizers for families known to have convex hyperplane images,
constructions for the linear-factor family, and a sampling falsifier that
looks for a midpoint of two image points with no preimage.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import least_squares

from .certificates import pdlc_witness
from .linalg import TAU_ZERO, b_orthonormal_basis, inertia
from .qform import QuadraticSystem, hyperplane_basis, restrict_to_hyperplane

VERDICTS = ("holds-structural", "holds-by-m2", "holds-by-m3-pdlc", "holds-by-span",
            "falsified", "unknown")

# a PD combination with this relative margin is conditioned well enough to stop searching
_GOOD_ENOUGH = 1e-2


def forms_of(sys_or_Qs) -> np.ndarray:
    if isinstance(sys_or_Qs, QuadraticSystem):
        return sys_or_Qs.Qs
    Qs = np.asarray(sys_or_Qs, dtype=float)
    return 0.5 * (Qs + np.transpose(Qs, (0, 2, 1)))


def quadratic_map(Qs, X) -> np.ndarray:
    """``(x^T Q_1 x, ..., x^T Q_m x)`` for each row of ``X``."""
    return np.einsum("...i,kij,...j->...k", X, Qs, X)


@dataclass
class HhcStatus:
    verdict: str
    evidence: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.verdict.startswith("holds")


@dataclass
class LinearFactorFamily:
    """``f_0`` positive definite and ``f_i(x) = (ell^T x)(ells[i]^T x)``."""

    ell: np.ndarray
    ells: list
    f0_matrix: np.ndarray

    def forms(self) -> np.ndarray:
        out = [np.asarray(self.f0_matrix, dtype=float)]
        for li in self.ells:
            out.append(0.5 * (np.outer(self.ell, li) + np.outer(li, self.ell)))
        return np.array(out)


def _vec_rank(Qs, tol: float = 1e-9) -> int:
    k = Qs.shape[1]
    iu = np.triu_indices(k)
    V = np.array([Q[iu] for Q in Qs])
    s = np.linalg.svd(V, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0]))) if s.size and s[0] > 0 else 0


def _spanning_subset(Qs, r: int) -> list:
    iu = np.triu_indices(Qs.shape[1])
    chosen = []
    for i, Q in enumerate(Qs):
        cand = chosen + [i]
        if _vec_rank(Qs[cand]) == len(cand):
            chosen = cand
        if len(chosen) == r:
            break
    return chosen


def _split_rank2(R, tol):
    """Write ``R = sym(p q^T)``; returns ``(p, q)`` or None if impossible."""
    vals, vecs = np.linalg.eigh(R)
    big = np.abs(vals) > tol
    if np.count_nonzero(big) == 1:
        k = int(np.flatnonzero(big)[0])
        u = vecs[:, k]
        return u, vals[k] * u
    if np.count_nonzero(big) != 2:
        return None
    i, j = np.flatnonzero(big)
    if vals[i] * vals[j] > 0:
        return None
    if vals[i] < 0:
        i, j = j, i
    a, b = np.sqrt(vals[i]), np.sqrt(-vals[j])
    return a * vecs[:, i] + b * vecs[:, j], a * vecs[:, i] - b * vecs[:, j]


def _parallel(u, v, tol=1e-7) -> bool:
    nu, nv = np.linalg.norm(u), np.linalg.norm(v)
    if nu == 0 or nv == 0:
        return False
    return abs(abs(u @ v) / (nu * nv) - 1.0) <= tol


def detect_linear_factor(Qs, theta=None, tol: float = 1e-8) -> Optional[LinearFactorFamily]:
    """Recognise ``span{Q_i} = span{f0, ell*l_1, ..., ell*l_k}`` with ``f0`` positive definite."""
    Qs = forms_of(Qs)
    N = Qs.shape[1]
    if theta is None:
        w = pdlc_witness(Qs, stop_at=_GOOD_ENOUGH * max(1.0, np.max(np.abs(Qs))))
        if w is None:
            return None
        theta = w.theta
    B = np.tensordot(theta, Qs, axes=1)
    if inertia(B).pos != N:
        return None
    Lc = np.linalg.cholesky(B)
    Li = np.linalg.inv(Lc)
    scale = max(1.0, np.max(np.abs(Qs)))
    factors = []
    for Q in Qs:
        # generalized eigenvalues of (Q, B); a value of multiplicity >= N - 2 is the f0 part
        mu = np.linalg.eigvalsh(Li @ Q @ Li.T)
        t = None
        for k in range(len(mu)):
            cluster = np.abs(mu - mu[k]) <= 1e-7 * max(1.0, np.max(np.abs(mu)))
            if np.count_nonzero(cluster) >= N - 2:
                t = float(np.mean(mu[cluster]))
                break
        if t is None:
            return None
        R = Q - t * B
        if np.max(np.abs(R)) <= tol * scale:
            continue
        pq = _split_rank2(R, 1e-7 * scale)
        if pq is None:
            return None
        factors.append((R, pq))
    if not factors:
        return None
    ell = None
    for cand in factors[0][1]:
        if all(any(_parallel(cand, f) for f in pq) for _, pq in factors[1:]):
            ell = cand / np.linalg.norm(cand)
            break
    if ell is None:
        return None
    ells = []
    for R, pq in factors:
        # R = sym(ell l^T): recover l from R ell and ell^T ell = 1
        Re = R @ ell
        li = 2.0 * Re - (ell @ Re) * ell
        ells.append(li)
        if np.max(np.abs(0.5 * (np.outer(ell, li) + np.outer(li, ell)) - R)) > 1e-7 * scale:
            return None
    return LinearFactorFamily(ell, ells, B)


def hhc_structural(sys_or_Qs, seed: int = 0) -> HhcStatus:
    """Check the structural classes with convex hyperplane images, in order:
    span of dimension at most two; span of dimension three with a PDLC witness
    on a spanning triple (forms of size at least 4); linear-factor families."""
    Qs = forms_of(sys_or_Qs)
    m, N = Qs.shape[0], Qs.shape[1]
    r = _vec_rank(Qs)
    if r <= 2:
        verdict = "holds-by-m2" if m <= 2 else "holds-by-span"
        return HhcStatus(verdict, {"span_dimension": r, "spanning": _spanning_subset(Qs, r)})
    if r == 3 and N >= 4:
        idx = _spanning_subset(Qs, 3)
        w = pdlc_witness(Qs[idx], seed=seed,
                         stop_at=_GOOD_ENOUGH * max(1.0, np.max(np.abs(Qs[idx]))))
        if w is not None:
            return HhcStatus("holds-by-m3-pdlc", {"span_dimension": 3, "spanning": idx,
                                                  "theta": w.theta, "min_eig": w.min_eig})
    fam = detect_linear_factor(Qs)
    if fam is not None:
        k = _vec_rank(fam.forms()[1:])
        if N > k + 1:
            return HhcStatus("holds-structural", {"family": fam, "factor_dimension": k})
    return HhcStatus("unknown", {"span_dimension": r})


@dataclass
class NormalizedBasis:
    P: Optional[np.ndarray]
    ell_scale: float = 0.0
    degenerate: bool = False


def normalize_pd_family(fam: LinearFactorFamily) -> NormalizedBasis:
    """Basis in which ``f0`` is the identity and ``ell`` depends on the first coordinate only.

    Built from a ``f0``-orthonormal basis of ``ker(ell)`` completed by the
    ``f0``-normalised vector ``f0^{-1} ell``.
    """
    B = np.asarray(fam.f0_matrix, dtype=float)
    ell = np.asarray(fam.ell, dtype=float)
    if not np.any(ell):
        return NormalizedBasis(None, 0.0, True)
    N = len(ell)
    p = int(np.argmax(np.abs(ell)))
    kernel = []
    for j in range(N):
        if j == p:
            continue
        v = np.zeros(N)
        v[j] = 1.0
        v[p] = -ell[j] / ell[p]
        kernel.append(v)
    U = b_orthonormal_basis(B, kernel) if kernel else []
    u1 = np.linalg.solve(B, ell)
    u1 = u1 / np.sqrt(u1 @ B @ u1)
    P = np.column_stack([u1] + list(U))
    return NormalizedBasis(P, float(ell @ u1))


def soc_preimage(y, tau_zero: float = TAU_ZERO) -> np.ndarray:
    """Preimage of ``y`` under ``x -> (|x|^2, x1 x1, x1 x2, ..., x1 xn)``.

    Requires ``y0 >= 0``, ``y1 >= 0`` and ``y0 y1 = y1^2 + ... + yn^2``.
    """
    y = np.asarray(y, dtype=float)
    n = len(y) - 1
    if n < 2:
        raise ValueError("need n >= 2")
    scale = max(1.0, float(np.max(np.abs(y))) ** 2)
    if y[0] < -tau_zero * scale or y[1] < -tau_zero * scale:
        raise ValueError("y0 and y1 must be nonnegative")
    if abs(y[0] * y[1] - np.sum(y[1:] ** 2)) > tau_zero * scale:
        raise ValueError("y is not on the cone boundary: y0 y1 != sum y_i^2")
    x = np.zeros(n)
    if y[1] > 0:
        r = np.sqrt(y[1])
        x[0] = r
        x[1:] = y[2:] / r
    else:
        x[1] = np.sqrt(max(y[0], 0.0))
    return x


def soc_map(X) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    return np.concatenate([np.sum(X * X, axis=-1, keepdims=True), X[..., :1] * X], axis=-1)


# ---------------------------------------------------------------------------
# falsification

@dataclass
class FalsificationWitness:
    """Midpoint ``z`` of ``phi(x)`` and ``phi(y)`` at distance ``residual`` from
    the image of ``phi`` restricted to the hyperplane with ``normal``."""

    normal: Optional[np.ndarray]
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    residual: float
    threshold: float
    best_w: np.ndarray


def _closest_preimage(R, z, starts, rng, target=0.0):
    """Multistart least squares for ``min_w |phi_R(w) - z|``; stops once below ``target``."""
    k = R.shape[1]
    m = R.shape[0]
    pad = max(0, k - m)  # zero residuals let MINPACK's LM run when m < k
    best = (np.inf, None)

    def fun(w):
        return np.concatenate([quadratic_map(R, w) - z, np.zeros(pad)])

    def jac(w):
        return np.vstack([2.0 * (R @ w), np.zeros((pad, k))])

    for w0 in starts:
        try:
            res = least_squares(fun, w0, jac=jac, method="lm", xtol=1e-15, ftol=1e-15,
                                gtol=1e-15, max_nfev=400)
        except (ValueError, np.linalg.LinAlgError):
            continue
        r = float(np.linalg.norm(fun(res.x)))
        if r < best[0]:
            best = (r, res.x)
            if r <= target:
                break
    return best


def _starts(u, v, rng, count):
    out = []
    for t in np.linspace(0.0, np.pi, 7)[1:-1]:
        out.append(np.cos(t) * u + np.sin(t) * v)
        out.append(np.cos(t) * u - np.sin(t) * v)
    scale = 0.5 * (np.linalg.norm(u) + np.linalg.norm(v))
    out += [scale * rng.standard_normal(len(u)) / np.sqrt(len(u)) for _ in range(count)]
    return out


def _falsify(Qs, bases, pairs_for, restarts, rng, threshold_rel):
    for normal, W in bases:
        R = np.array([restrict_to_hyperplane(Q, W) for Q in Qs]) if W is not None else Qs
        for x, y in pairs_for(normal, W):
            u = W.T @ x if W is not None else x
            v = W.T @ y if W is not None else y
            pu, pv = quadratic_map(R, u), quadratic_map(R, v)
            z = 0.5 * (pu + pv)
            thr = threshold_rel * max(1.0, float(np.linalg.norm(pu - pv)))
            r, w = _closest_preimage(R, z, _starts(u, v, rng, restarts), rng, thr)
            if r <= thr:
                continue
            r2, w2 = _closest_preimage(R, z, _starts(u, v, rng, 10 * restarts), rng, thr)
            if r2 < r:
                r, w = r2, w2
            if r > thr:
                return FalsificationWitness(normal, np.asarray(x), np.asarray(y), z, r, thr, w)
    return None


def _sign_vectors(N: int) -> np.ndarray:
    """Nonzero vectors in ``{-1, 0, 1}^N`` whose first nonzero entry is positive."""
    V = np.array(list(product((-1.0, 0.0, 1.0), repeat=N)))
    first = np.array([v[np.flatnonzero(v)[0]] if np.any(v) else 0.0 for v in V])
    V = V[first > 0]
    return V[np.argsort(np.count_nonzero(V, axis=1), kind="stable")]


def hhc_falsify(sys_or_Qs, trials: int = 100, restarts: int = 8, seed: int = 0,
                normals: Optional[Sequence] = None, pairs: Optional[Sequence] = None,
                pairs_per_plane: int = 2, structured: bool = True, structured_pairs: int = 12,
                max_structured_dim: int = 5,
                threshold_rel: float = 1e-2) -> Optional[FalsificationWitness]:
    """Search for a hyperplane whose image under the quadratic map is not convex.

    Hyperplanes are tried in this order: the supplied ``normals``, then
    ``x_last = 0``, then (for forms of size at most ``max_structured_dim``)
    normals with entries in ``{-1, 0, 1}`` paired with sign vectors lying in
    the hyperplane, then ``trials`` uniformly random normals.  Supplied
    ``pairs`` (points of the full space) are projected onto each supplied
    hyperplane.  Heuristic: a returned witness survived a 10x re-check.
    """
    Qs = forms_of(sys_or_Qs)
    N = Qs.shape[1]
    rng = np.random.default_rng(seed)
    planes = [(np.asarray(a, dtype=float), "user") for a in (normals or [])]
    canon = np.zeros(N)
    canon[-1] = 1.0
    planes.append((canon, "random"))
    signs = _sign_vectors(N) if structured and N <= max_structured_dim else np.empty((0, N))
    planes += [(a, "sign") for a in signs]
    for _ in range(trials):
        a = rng.standard_normal(N)
        planes.append((a / np.linalg.norm(a), "random"))
    kinds = {id(a): k for a, k in planes}
    bases = [(a, hyperplane_basis(a)) for a, _ in planes]

    def pairs_for(a, W):
        out = []
        kind = kinds[id(a)]
        if kind == "user" and pairs:
            P = W @ W.T
            for x, y in pairs:
                out.append((P @ np.asarray(x, float), P @ np.asarray(y, float)))
        elif kind == "sign":
            inside = signs[np.abs(signs @ a) < 0.5]
            cand = [(inside[i], inside[j]) for i in range(len(inside))
                    for j in range(i + 1, len(inside))]
            if len(cand) > structured_pairs:
                pick = rng.choice(len(cand), structured_pairs, replace=False)
                cand = [cand[k] for k in sorted(pick)]
            return cand
        for _ in range(pairs_per_plane):
            out.append((W @ rng.standard_normal(N - 1), W @ rng.standard_normal(N - 1)))
        return out

    return _falsify(Qs, bases, pairs_for, restarts, rng, threshold_rel)


def hidden_convexity_falsify(sys_or_Qs, trials: int = 100, restarts: int = 8, seed: int = 0,
                             threshold_rel: float = 1e-2) -> Optional[FalsificationWitness]:
    """Same search on the whole space (no hyperplane restriction)."""
    Qs = forms_of(sys_or_Qs)
    N = Qs.shape[1]
    rng = np.random.default_rng(seed)

    def pairs_for(a, W):
        return [(rng.standard_normal(N), rng.standard_normal(N)) for _ in range(trials)]

    return _falsify(Qs, [(None, None)], pairs_for, restarts, rng, threshold_rel)
