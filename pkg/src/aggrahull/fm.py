"""Fourier-Motzkin elimination with strict rows and multiplier tracking.

A system is a list of rows ``c^T x <= h`` (or ``< h`` when strict).  Each
row carries the nonnegative multipliers that combine the original rows into
it, so every derived inequality comes with its own proof.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

ROW_CAP = 1_000_000
TOL = 1e-12


class FMBlowupError(RuntimeError):
    pass


class InfeasibleError(ValueError):
    pass


@dataclass
class Rows:
    C: np.ndarray       # (k, d) coefficients
    h: np.ndarray       # (k,) right-hand sides
    strict: np.ndarray  # (k,) bool
    L: np.ndarray       # (k, r) multipliers on the original rows
    depth: int = 0      # number of eliminated variables

    @classmethod
    def make(cls, C, h, strict=False) -> "Rows":
        C = np.atleast_2d(np.asarray(C, dtype=float))
        h = np.asarray(h, dtype=float).ravel()
        k = C.shape[0]
        st = np.broadcast_to(np.asarray(strict, dtype=bool), (k,)).copy()
        return cls(C.copy(), h.copy(), st, np.eye(k))

    def __len__(self):
        return len(self.h)

    def copy(self) -> "Rows":
        return Rows(self.C.copy(), self.h.copy(), self.strict.copy(), self.L.copy(), self.depth)


def _normalize(rows: Rows) -> Rows:
    """Scale rows to unit max-coefficient and merge duplicates (keeping the tightest)."""
    C, h, st, L = rows.C, rows.h, rows.strict, rows.L
    if not len(h):
        return rows
    s = np.max(np.abs(C), axis=1) if C.shape[1] else np.zeros(len(h))
    s = np.where(s > TOL, s, np.maximum(np.abs(h), 1.0))
    C, h, L = C / s[:, None], h / s, L / s[:, None]
    C[np.abs(C) <= TOL] = 0.0
    key = np.round(C, 10)
    order = np.lexsort(np.vstack([~st, h, key.T[::-1]]) if C.shape[1] else np.vstack([~st, h]))
    keep = []
    last = None
    for i in order:
        k = key[i].tobytes()
        if k == last:
            continue
        keep.append(i)
        last = k
    keep = np.array(sorted(keep), dtype=int)
    return Rows(C[keep], h[keep], st[keep], L[keep], rows.depth)


def eliminate(rows: Rows, var: int, chernikov: bool = True) -> Rows:
    """Remove variable ``var`` (the column is deleted)."""
    C, h, st, L = rows.C, rows.h, rows.strict, rows.L
    col = C[:, var]
    P = np.flatnonzero(col > TOL)
    N = np.flatnonzero(col < -TOL)
    Z = np.flatnonzero(np.abs(col) <= TOL)
    if len(P) * len(N) + len(Z) > ROW_CAP:
        raise FMBlowupError(f"elimination would create {len(P) * len(N) + len(Z)} rows "
                            f"(cap {ROW_CAP})")
    keep_cols = [j for j in range(C.shape[1]) if j != var]
    if len(P) and len(N):
        cp = col[P][:, None]
        cn = -col[N][None, :]
        # row_p * cn + row_q * cp eliminates the variable
        newC = (C[P][:, None, :] * cn[..., None] + C[N][None, :, :] * cp[..., None]).reshape(-1, C.shape[1])
        newh = (h[P][:, None] * cn + h[N][None, :] * cp).ravel()
        newL = (L[P][:, None, :] * cn[..., None] + L[N][None, :, :] * cp[..., None]).reshape(-1, L.shape[1])
        newS = (st[P][:, None] | st[N][None, :]).ravel()
        if chernikov:
            supp = np.count_nonzero(newL > TOL, axis=1)
            ok = supp <= rows.depth + 2
            newC, newh, newL, newS = newC[ok], newh[ok], newL[ok], newS[ok]
    else:
        newC = np.empty((0, C.shape[1]))
        newh = np.empty(0)
        newL = np.empty((0, L.shape[1]))
        newS = np.empty(0, dtype=bool)
    out = Rows(np.vstack([C[Z], newC])[:, keep_cols], np.concatenate([h[Z], newh]),
               np.concatenate([st[Z], newS]), np.vstack([L[Z], newL]), rows.depth + 1)
    return _normalize(out)


def _trivial_ok(rows: Rows) -> bool:
    """All-zero rows must read ``0 <= h`` (or ``0 < h``)."""
    zero = np.all(np.abs(rows.C) <= TOL, axis=1) if rows.C.shape[1] else np.ones(len(rows), bool)
    h, st = rows.h[zero], rows.strict[zero]
    return bool(np.all(np.where(st, h > TOL, h >= -TOL)))


def _drop_trivial(rows: Rows) -> Rows:
    nz = np.any(np.abs(rows.C) > TOL, axis=1)
    return Rows(rows.C[nz], rows.h[nz], rows.strict[nz], rows.L[nz], rows.depth)


def fm_point(C, h, strict=False) -> Optional[np.ndarray]:
    """A point of ``{x : C x <= h}`` (strict rows ``<``), or None when empty.

    Variables are eliminated last-to-first; the point is rebuilt by back
    substitution, choosing each coordinate inside its admissible interval.
    """
    rows = Rows.make(C, h, strict)
    d = rows.C.shape[1]
    stages = [rows]
    for v in range(d - 1, -1, -1):
        stages.append(eliminate(stages[-1], v, chernikov=False))
    if not _trivial_ok(stages[-1]):
        return None
    x = np.zeros(0)
    for v in range(d):
        st = stages[d - 1 - v]  # system in variables 0..v
        c = st.C[:, v]
        rest = st.h - st.C[:, :v] @ x
        lo, hi = -np.inf, np.inf
        lo_strict = hi_strict = False
        for ci, ri, si in zip(c, rest, st.strict):
            if ci > TOL:
                b = ri / ci
                if b < hi or (b == hi and si):
                    hi, hi_strict = b, si
            elif ci < -TOL:
                b = ri / ci
                if b > lo or (b == lo and si):
                    lo, lo_strict = b, si
        if np.isfinite(lo) and np.isfinite(hi):
            val = 0.5 * (lo + hi)
        elif np.isfinite(lo):
            val = lo + 1.0
        elif np.isfinite(hi):
            val = hi - 1.0
        else:
            val = 0.0
        x = np.append(x, val)
    return x


def fm_feasible(C, h, strict=False) -> bool:
    return fm_point(C, h, strict) is not None


@dataclass
class OpenPolyhedron:
    """``{x : A x < b}`` (``<=`` when ``strict`` is False)."""

    A: np.ndarray
    b: np.ndarray
    strict: bool = True

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.asarray(self.b, dtype=float).ravel()
        if self.A.shape[0] != self.b.shape[0]:
            raise ValueError("A and b have different numbers of rows")

    def contains(self, X) -> np.ndarray:
        V = np.asarray(X, dtype=float) @ self.A.T - self.b
        return np.all(V < 0 if self.strict else V <= 0, axis=-1)


@dataclass
class ProjectedPolyhedron:
    """``{y : G y < h}`` with ``multipliers[k] @ A == G[k]`` and ``multipliers[k] @ b == h[k]``."""

    G: np.ndarray
    h: np.ndarray
    multipliers: np.ndarray
    strict: bool = True

    def contains(self, Y) -> np.ndarray:
        V = np.asarray(Y, dtype=float) @ self.G.T - self.h
        return np.all(V < 0 if self.strict else V <= 0, axis=-1)


def _redundant(C, h, r, extra_C=None, extra_h=None) -> bool:
    """Row ``r`` is implied by the others (plus optional extra rows) in the closure."""
    others = [k for k in range(len(h)) if k != r]
    Cs = [C[others], -C[r][None, :]]
    hs = [h[others], [-h[r]]]
    st = [np.zeros(len(others), bool), [True]]
    if extra_C is not None:
        Cs.append(extra_C)
        hs.append(extra_h)
        st.append(np.zeros(len(extra_h), bool))
    return not fm_feasible(np.vstack(Cs), np.concatenate(hs), np.concatenate(st))


def fm_project(poly: OpenPolyhedron, orthant: bool = False) -> ProjectedPolyhedron:
    """Project ``{(x, y) : A x <= b, y <= x}`` onto ``y``.

    Rows are reported irredundant: dominated duplicates go first, then each
    row is dropped if violating it while keeping the rest is infeasible.
    With ``orthant`` redundancy is judged inside ``y >= 0`` only.
    """
    A, b = poly.A, poly.b
    m, n = A.shape
    pre = fm_point(np.vstack([A, -np.eye(n)]), np.concatenate([b, np.zeros(n)]),
                   np.concatenate([np.full(m, poly.strict), np.zeros(n, bool)]))
    if pre is None:
        raise InfeasibleError("the polyhedron does not meet the nonnegative orthant")
    # variables (x, y); rows A x <= b and y - x <= 0
    C = np.vstack([np.hstack([A, np.zeros((m, n))]), np.hstack([-np.eye(n), np.eye(n)])])
    rows = Rows.make(C, np.concatenate([b, np.zeros(n)]), False)
    for v in range(n - 1, -1, -1):
        rows = eliminate(rows, v)
    if not _trivial_ok(rows):
        raise InfeasibleError("projection is empty")
    rows = _drop_trivial(rows)
    G, h, L = rows.C, rows.h, rows.L[:, :m]
    extra_C = -np.eye(n) if orthant else None
    extra_h = np.zeros(n) if orthant else None
    keep = list(range(len(h)))
    for r in range(len(h) - 1, -1, -1):
        idx = [k for k in keep]
        pos = idx.index(r)
        if _redundant(G[idx], h[idx], pos, extra_C, extra_h):
            keep.remove(r)
    keep = np.array(keep, dtype=int)
    return ProjectedPolyhedron(G[keep], h[keep], L[keep], poly.strict)
