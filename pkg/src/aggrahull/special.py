"""Closed-form hulls for structured systems.

* sphere systems: every ``A_i`` is ``I``, ``0`` or ``-I``;
* diagonal systems: every homogenized matrix is diagonal, so
  ``S = {x : x*x in P}`` for an open polyhedron ``P`` and the hull follows
  from projecting ``P`` downward;
* closed systems: the interior of the closed hull of ``T = {f_i <= 0}``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .certificates import EmptinessCertificate, pdlc_witness
from .engine import HullDescription, enumerate_hull, make_record
from .fm import OpenPolyhedron, ProjectedPolyhedron, fm_point, fm_project
from .linalg import min_eig
from .oracle import SamplerConfig, sample_T
from .qform import (TAU_A, PreconditionError, QuadraticSystem, SphereStructure,
                    detect_diagonal, detect_sphere_structure)


class HypothesisWarning(UserWarning):
    """A completeness hypothesis could not be confirmed; results remain valid candidates."""


def span_dimension(sys: QuadraticSystem, tol: float = 1e-9) -> int:
    iu = np.triu_indices(sys.n + 1)
    V = np.array([Q[iu] for Q in sys.Qs])
    s = np.linalg.svd(V, compute_uv=False)
    return int(np.sum(s > tol * max(1.0, s[0])))


# ---------------------------------------------------------------------------
# spheres and halfspaces

def _sphere_structure(sys: QuadraticSystem) -> SphereStructure:
    st = detect_sphere_structure(sys)
    if st is None:
        raise ValueError("system is not sphere-type: some A_i is not I, 0 or -I")
    return st


def sphere_hull(sys: QuadraticSystem, check_span: bool = True, seed: int = 0) -> HullDescription:
    """Candidates ``f_i`` (``i`` in P or Z) and ``f_i + f_j`` (``i`` in P, ``j`` in N)."""
    st = _sphere_structure(sys)
    notes = []
    if check_span:
        d = span_dimension(sys)
        if d == sys.n:
            if pdlc_witness(sys, seed=seed) is None:
                notes.append(f"span dimension {d} equals n but no PDLC witness was found; "
                             "completeness is not guaranteed")
        elif d > sys.n:
            notes.append(f"span dimension {d} exceeds n - 1; completeness is not guaranteed")
    for msg in notes:
        warnings.warn(msg, HypothesisWarning, stacklevel=2)
    recs = []
    for i in sorted(st.P + st.Z):
        lam = np.zeros(sys.m)
        lam[i] = 1.0
        recs.append(make_record(sys, lam, "sphere-formula"))
    for i in st.P:
        for j in st.N:
            lam = np.zeros(sys.m)
            lam[i] = lam[j] = 1.0
            recs.append(make_record(sys, lam, "sphere-formula", pair=(i, j)))
    return HullDescription(sys, recs, notes=notes)


def sphere_rn_test(sys: QuadraticSystem, tol: float = TAU_A) -> bool:
    """True when ``conv(S)`` is not all of ``R^n``."""
    st = _sphere_structure(sys)
    if st.P:
        return True
    for i in st.Z:
        f = sys[i]
        if np.max(np.abs(f.b)) > tol or f.c >= 0:
            return True
    return False


@dataclass
class SphereOmega:
    """``Omega`` with zero adjoined: ``{lam >= 0 : sum_P lam >= sum_N lam}``."""

    a: np.ndarray
    P: tuple
    N: tuple

    def contains(self, lam, tol: float = 1e-12) -> bool:
        lam = np.asarray(lam, dtype=float)
        return bool(np.all(lam >= -tol) and self.a @ lam >= -tol)

    def __str__(self):
        lhs = " + ".join(f"l{i + 1}" for i in self.P) or "0"
        rhs = " + ".join(f"l{i + 1}" for i in self.N) or "0"
        return f"{{l >= 0 : {lhs} >= {rhs}}}"


def sphere_omega(sys: QuadraticSystem) -> SphereOmega:
    st = _sphere_structure(sys)
    a = np.zeros(sys.m)
    a[list(st.P)] = 1.0
    a[list(st.N)] = -1.0
    return SphereOmega(a, st.P, st.N)


# ---------------------------------------------------------------------------
# diagonal systems

def _require_diagonal(sys: QuadraticSystem):
    if not detect_diagonal(sys):
        raise ValueError("system is not diagonal")


def diagonal_to_polyhedron(sys: QuadraticSystem) -> OpenPolyhedron:
    """Rows ``diag(A_i)`` and right-hand sides ``-c_i``."""
    _require_diagonal(sys)
    if not (sys.all_strict or sys.all_closed):
        raise ValueError("mixed strictness is not supported for diagonal systems")
    A = np.array([np.diag(f.A) for f in sys])
    b = -np.array([f.c for f in sys])
    return OpenPolyhedron(A, b, sys.all_strict)


def diagonal_empty(sys: QuadraticSystem) -> Optional[EmptinessCertificate]:
    """Nonzero ``lam >= 0`` with ``lam^T A >= 0`` and ``lam^T b <= 0``, if any."""
    poly = diagonal_to_polyhedron(sys)
    A, b = poly.A, poly.b
    m, n = A.shape
    C = np.vstack([-np.eye(m), -A.T, b[None, :], np.ones((1, m)), -np.ones((1, m))])
    h = np.concatenate([np.zeros(m + n + 1), [1.0, -1.0]])
    lam = fm_point(C, h)
    if lam is None:
        return None
    lam = np.maximum(lam, 0.0)
    lam = lam / lam.sum()
    return EmptinessCertificate(lam, min_eig(np.tensordot(lam, sys.Qs, axes=1)),
                                note="exact for diagonal systems")


def diagonal_rn(sys: QuadraticSystem) -> bool:
    """``conv(S) = R^n`` exactly when ``{A x <= 0, x >= 1}`` is feasible."""
    poly = diagonal_to_polyhedron(sys)
    m, n = poly.A.shape
    C = np.vstack([poly.A, -np.eye(n)])
    h = np.concatenate([np.zeros(m), -np.ones(n)])
    return fm_point(C, h) is not None


def diagonal_projection(sys: QuadraticSystem) -> ProjectedPolyhedron:
    return fm_project(diagonal_to_polyhedron(sys), orthant=True)


def diagonal_hull(sys: QuadraticSystem) -> HullDescription:
    """One aggregation per facet of the downward projection of ``P``."""
    if diagonal_empty(sys) is not None:
        raise PreconditionError("S is empty")
    if diagonal_rn(sys):
        raise PreconditionError("conv(S) is all of R^n")
    proj = diagonal_projection(sys)
    recs = []
    for lam, g in zip(proj.multipliers, proj.G):
        if np.any(g < -1e-9):
            raise ArithmeticError("facet normal has a negative entry")
        recs.append(make_record(sys, np.maximum(lam, 0.0), "diagonal-facet"))
    return HullDescription(sys, recs)


# ---------------------------------------------------------------------------
# closed systems

@dataclass
class ClosedHullResult:
    hull: HullDescription
    zero_aggregation_check: bool
    isolated: np.ndarray = None
    notes: list = field(default_factory=list)

    @property
    def aggregations(self):
        return self.hull.aggregations


def zero_aggregation(sys: QuadraticSystem) -> Optional[np.ndarray]:
    """``lam >= 0`` with ``sum lam = 1`` and ``sum lam_i Q_i = 0``, if one exists."""
    m = sys.m
    iu = np.triu_indices(sys.n + 1)
    E = np.array([Q[iu] for Q in sys.Qs]).T  # entries x m
    C = np.vstack([-np.eye(m), E, -E, np.ones((1, m)), -np.ones((1, m))])
    h = np.concatenate([np.zeros(m + 2 * len(E)), [1.0, -1.0]])
    return fm_point(C, h)


def closed_hull(sys: QuadraticSystem, cfg: SamplerConfig = SamplerConfig()) -> ClosedHullResult:
    """Aggregations describing the interior of the closed convex hull of ``T``."""
    if not sys.all_closed:
        raise ValueError("closed_hull needs an all-closed system")
    z = zero_aggregation(sys)
    if z is not None:
        raise PreconditionError(f"some nonzero aggregation vanishes identically: lambda = {z.tolist()}")
    T = sample_T(sys, cfg)
    P = T.points
    if len(P) < sys.n + 1 or np.linalg.matrix_rank(P - P.mean(axis=0), tol=1e-9) < sys.n:
        raise PreconditionError("the closed hull of T has empty interior")
    hull = enumerate_hull(sys, P, cfg, closed=True)
    return ClosedHullResult(hull, True, T.extra)
