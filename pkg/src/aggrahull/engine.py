"""Aggregation engine.

Classifies aggregated forms by inertia, decides goodness of an aggregation
by checking which cone component contains the sampled set, analyses
two-constraint pencils through their generalized eigenvalues, and assembles
a finite hull description from the outermost good endpoints of every pair.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np
from scipy.linalg import null_space

from ._parallel import thread_map
from .linalg import (TAU_ZERO, Inertia, PencilRoot, SingularPencilError, inertia,
                     min_eig, pencil_det_poly)
from .oracle import SamplerConfig, SamplingError, sample_S, sample_T
from .qform import QuadraticFunction, QuadraticSystem, aggregate, check_weights

PROVENANCES = ("pairwise-endpoint", "sphere-formula", "diagonal-facet", "user")


class NumericalAnomaly(UserWarning):
    pass


def normalize_weights(lam) -> np.ndarray:
    lam = np.asarray(lam, dtype=float)
    s = lam.sum()
    if s <= 0:
        raise ValueError("aggregation weights must be nonzero")
    return lam / s


# ---------------------------------------------------------------------------
# classification

@dataclass
class SccClassification:
    """``kind`` is ``psd``, ``one-negative`` or ``many-negative``.

    For ``one-negative`` forms, ``split_normal`` is the eigenvector of the
    negative eigenvalue, oriented with a nonnegative last coordinate (first
    nonzero coordinate positive if the last one vanishes).  Its hyperplane
    separates the two convex cones making up ``{z : z^T Q z < 0}``.
    """

    kind: str
    Q: np.ndarray
    inertia: Inertia
    split_normal: Optional[np.ndarray] = None


def _orient(u: np.ndarray) -> np.ndarray:
    if abs(u[-1]) > 1e-12:
        return u if u[-1] > 0 else -u
    k = np.flatnonzero(np.abs(u) > 1e-12)[0]
    return u if u[k] > 0 else -u


def classify(Q, tau_zero: float = TAU_ZERO) -> SccClassification:
    Q = np.asarray(Q, dtype=float)
    Q = 0.5 * (Q + Q.T)
    vals, vecs = np.linalg.eigh(Q)
    iner = inertia(Q, tau_zero)
    if iner.neg == 0:
        return SccClassification("psd", Q, iner)
    if iner.neg == 1:
        return SccClassification("one-negative", Q, iner, _orient(vecs[:, 0]))
    return SccClassification("many-negative", Q, iner)


def component_labels(scc: SccClassification, X, closed: bool = False) -> np.ndarray:
    """+1 / -1 for the cone component of ``(x, 1)``, 0 outside.

    With ``closed`` the closed cones are used, and points on the splitting
    hyperplane get 0.
    """
    if scc.kind != "one-negative":
        raise ValueError(f"components are defined for one-negative forms, not {scc.kind}")
    X = np.atleast_2d(np.asarray(X, dtype=float))
    Z = np.hstack([X, np.ones((len(X), 1))])
    q = np.einsum("ri,ij,rj->r", Z, scc.Q, Z)
    side = Z @ scc.split_normal
    scale = max(1.0, np.max(np.abs(scc.Q)))
    if closed:
        inside = q <= TAU_ZERO * scale * np.sum(Z * Z, axis=1)
        side = np.where(np.abs(side) <= 1e-9 * np.linalg.norm(Z, axis=1), 0.0, side)
    else:
        inside = q < 0
    return np.where(inside, np.sign(side), 0).astype(int)


def component_of(scc: SccClassification, x) -> str:
    lab = int(component_labels(scc, x)[0])
    return {1: "plus", -1: "minus", 0: "outside"}[lab]


# ---------------------------------------------------------------------------
# goodness

@dataclass
class GoodnessVerdict:
    """``status`` is ``good``, ``not-good``, ``psd-empty`` or ``not-eligible``.

    ``not-good`` comes with two sample points lying in opposite components;
    ``good`` only means every sample landed in one component.
    """

    status: str
    side: str = ""
    witnesses: list = field(default_factory=list)
    kind: str = ""
    n_samples: int = 0

    @property
    def good(self) -> bool:
        return self.status == "good"


def is_good(sys: QuadraticSystem, lam, samples=None, cfg: SamplerConfig = SamplerConfig(),
            closed: bool = False) -> GoodnessVerdict:
    """Monte-Carlo goodness test of the aggregation ``lam``.

    ``samples`` are points of ``S`` (or of ``T`` with ``closed=True``); they
    are drawn with ``cfg`` when not supplied.
    """
    lam = check_weights(lam, sys.m)
    if not np.any(lam):
        raise ValueError("aggregation weights must be nonzero")
    lam = normalize_weights(lam)
    F = aggregate(sys, lam)
    scc = classify(F.Q)
    if scc.kind == "psd":
        return GoodnessVerdict("psd-empty", kind=scc.kind)
    if scc.kind == "many-negative":
        return GoodnessVerdict("not-eligible", kind=scc.kind)
    if samples is None:
        samples = (sample_T(sys, cfg) if closed else sample_S(sys, cfg)).points
    X = np.atleast_2d(samples)
    if not len(X):
        raise SamplingError("S-sampling failed: no points to test goodness against")
    lab = component_labels(scc, X, closed=closed)
    pos, neg = np.flatnonzero(lab > 0), np.flatnonzero(lab < 0)
    if len(pos) and len(neg):
        return GoodnessVerdict("not-good", "", [X[pos[0]], X[neg[0]]], scc.kind, len(X))
    if np.all(np.linalg.eigvalsh(F.A) >= -TAU_ZERO * max(1.0, np.max(np.abs(F.A)))):
        side = "single"
    else:
        side = "plus" if len(pos) else "minus"
    return GoodnessVerdict("good", side, [], scc.kind, len(X))


# ---------------------------------------------------------------------------
# pencils

@dataclass
class PencilAnalysis:
    """Pencil ``alpha Q_i + (1 - alpha) Q_j`` on ``[0, 1]``.

    ``cells`` lists ``(lo, hi, nu)`` for the open cells between consecutive
    breakpoints (0, the GEVs, 1) and ``points`` lists ``(alpha, nu)`` at the
    breakpoints.  ``intervals`` are the maximal closed sets where ``nu = 1``.
    """

    pair: tuple
    gevs: list
    cells: list
    points: list
    intervals: list
    anomaly: bool = False
    reduced: bool = False

    @property
    def n_c(self) -> int:
        return len(self.intervals)

    @property
    def gev_values(self) -> list:
        return [r.value for r in self.gevs]


def _pencil_roots(Qi, Qj):
    try:
        return pencil_det_poly(Qi, Qj), False
    except SingularPencilError:
        pass
    # drop the common kernel, which only contributes zero eigenvalues
    K = null_space(np.vstack([Qi, Qj]), rcond=1e-10)
    if K.shape[1] == 0:
        raise SingularPencilError("pencil singular everywhere")
    Z = null_space(K.T)
    return pencil_det_poly(Z.T @ Qi @ Z, Z.T @ Qj @ Z), True


def pencil_analysis(sys: QuadraticSystem, i: int, j: int, tau_zero: float = TAU_ZERO) -> PencilAnalysis:
    if i == j:
        raise ValueError("pencil needs two distinct constraints")
    Qi, Qj = sys.Qs[i], sys.Qs[j]
    poly, reduced = _pencil_roots(Qi, Qj)
    gevs = poly.roots

    def nu(a):
        return inertia(a * Qi + (1 - a) * Qj, tau_zero).neg

    breaks = sorted({0.0, 1.0} | {r.value for r in gevs})
    points = [(b, nu(b)) for b in breaks]
    cells = []
    anomaly = False
    for lo, hi in zip(breaks[:-1], breaks[1:]):
        if hi - lo <= 0:
            continue
        probes = [nu(lo + t * (hi - lo)) for t in (0.25, 0.5, 0.75)]
        if len(set(probes)) > 1:
            anomaly = True
        cells.append((lo, hi, probes[1]))
    # assemble maximal nu = 1 sets from points and cells in order
    seq = []
    for k, (b, nb) in enumerate(points):
        seq.append((b, b, nb))
        if k < len(cells):
            seq.append(cells[k])
    intervals = []
    cur = None
    for lo, hi, v in seq:
        if v == 1:
            cur = [lo, hi] if cur is None else [cur[0], hi]
        elif cur is not None:
            intervals.append(tuple(cur))
            cur = None
    if cur is not None:
        intervals.append(tuple(cur))
    intervals = _close_intervals(intervals)
    if len(intervals) > 2:
        anomaly = True
        warnings.warn(f"pencil ({i}, {j}) has {len(intervals)} one-negative intervals",
                      NumericalAnomaly, stacklevel=2)
    return PencilAnalysis((i, j), gevs, cells, points, intervals, anomaly, reduced)


def _close_intervals(intervals):
    """Merge closed intervals that touch (cells keep their endpoints even when nu != 1 there)."""
    out = []
    for lo, hi in intervals:
        if out and out[-1][1] >= lo:
            out[-1] = (out[-1][0], max(out[-1][1], hi))
        else:
            out.append((lo, hi))
    return out


# ---------------------------------------------------------------------------
# aggregation records and pairwise endpoints

@dataclass
class AggregationRecord:
    lam: np.ndarray
    function: QuadraticFunction
    kind: str
    provenance: str = "pairwise-endpoint"
    pair: Optional[tuple] = None
    alpha: Optional[float] = None
    goodness: Optional[GoodnessVerdict] = None

    @property
    def Q(self) -> np.ndarray:
        return self.function.Q


def make_record(sys: QuadraticSystem, lam, provenance: str = "user", **kw) -> AggregationRecord:
    if provenance not in PROVENANCES:
        raise ValueError(f"unknown provenance {provenance!r}")
    lam = normalize_weights(check_weights(lam, sys.m))
    F = aggregate(sys, lam)
    F = QuadraticFunction(F.A, F.b, F.c, True)
    return AggregationRecord(lam, F, classify(F.Q).kind, provenance, **kw)


def pair_weight(m: int, i: int, j: int, alpha: float) -> np.ndarray:
    lam = np.zeros(m)
    lam[i] += alpha
    lam[j] += 1.0 - alpha
    return lam


def pairwise_endpoints(sys: QuadraticSystem, i: int, j: int, samples=None,
                       cfg: SamplerConfig = SamplerConfig(), closed: bool = False,
                       analysis: Optional[PencilAnalysis] = None) -> list:
    """Outermost endpoints of the good part of the pencil ``(i, j)``.

    Every open cell with ``nu = 1`` is tested for goodness at its midpoint,
    and breakpoints with ``nu = 1`` that are not adjacent to such a cell are
    tested on their own.  Returns at most two records.
    """
    pa = analysis or pencil_analysis(sys, i, j)
    if samples is None:
        samples = (sample_T(sys, cfg) if closed else sample_S(sys, cfg)).points
    pieces = []
    for lo, hi, v in pa.cells:
        if v != 1:
            continue
        mid = 0.5 * (lo + hi)
        g = is_good(sys, pair_weight(sys.m, i, j, mid), samples, closed=closed)
        if g.good:
            pieces.append((lo, hi))
    for b, nb in pa.points:
        if nb != 1 or any(lo <= b <= hi for lo, hi in pieces):
            continue
        adjacent = any(v == 1 and (lo == b or hi == b) for lo, hi, v in pa.cells)
        if adjacent:
            continue
        if is_good(sys, pair_weight(sys.m, i, j, b), samples, closed=closed).good:
            pieces.append((b, b))
    if not pieces:
        return []
    a_lo = min(p[0] for p in pieces)
    a_hi = max(p[1] for p in pieces)
    alphas = [a_lo] if abs(a_hi - a_lo) <= 1e-12 else [a_lo, a_hi]
    out = []
    for a in alphas:
        rec = make_record(sys, pair_weight(sys.m, i, j, a), "pairwise-endpoint",
                          pair=(i, j), alpha=float(a))
        out.append(rec)
    return out


# ---------------------------------------------------------------------------
# whole-space test

def covers_space(F: QuadraticFunction, tol: float = TAU_ZERO) -> bool:
    """True when ``F(x) < 0`` for every ``x``.

    ``sup F < 0`` exactly when ``A`` is negative semidefinite, ``b`` lies in
    the range of ``A`` and ``c - b^T A^+ b < 0``.
    """
    scale = max(1.0, np.max(np.abs(F.Q)))
    vals, vecs = np.linalg.eigh(F.A)
    if vals[-1] > tol * scale:
        return False
    nz = vals < -tol * scale
    coef = vecs.T @ F.b
    if np.any(np.abs(coef[~nz]) > tol * scale):
        return False
    sup = F.c - np.sum(coef[nz] ** 2 / vals[nz])
    return bool(sup < -tol * scale)


# ---------------------------------------------------------------------------
# improvement and support reduction

def improve(sys: QuadraticSystem, lam, theta, samples=None, tau_zero: float = TAU_ZERO) -> np.ndarray:
    """Return ``lam + theta`` for a direction with ``Q_theta`` positive semidefinite.

    The number of negative eigenvalues cannot grow (Weyl); this is asserted.
    With ``samples`` the inclusion ``S_{lam'} within S_lam`` is checked on them.
    """
    lam = np.asarray(lam, dtype=float)
    theta = np.asarray(theta, dtype=float)
    Qs = sys.Qs
    Qt = np.tensordot(theta, Qs, axes=1)
    scale = max(1.0, np.max(np.abs(Qs)))
    if min_eig(Qt) < -tau_zero * scale * max(1.0, np.abs(theta).sum()):
        raise ValueError("Q_theta is not positive semidefinite")
    new = lam + theta
    if np.any(new < -1e-12 * max(1.0, np.abs(lam).sum())):
        raise ValueError(f"lambda + theta leaves the nonnegative orthant: {new.tolist()}")
    new = np.maximum(new, 0.0)
    if not np.any(new):
        raise ValueError("lambda + theta is zero")
    before = inertia(np.tensordot(lam, Qs, axes=1), tau_zero).neg
    after = inertia(np.tensordot(new, Qs, axes=1), tau_zero).neg
    if after > before:
        raise ArithmeticError(f"negative eigenvalue count grew from {before} to {after}")
    if samples is not None:
        X = np.atleast_2d(samples)
        Fn = aggregate(sys, new)(X)
        Fo = aggregate(sys, lam)(X)
        if np.any((Fn < 0) & (Fo >= 0)):
            raise ArithmeticError("sampled S_lambda' is not contained in S_lambda")
    return new


class MissingWitnessError(LookupError):
    def __init__(self, msg, partial):
        super().__init__(msg)
        self.partial = partial


@dataclass
class SupportReduction:
    lam: np.ndarray
    steps: int
    history: list
    kind: str


def support_reduce(sys: QuadraticSystem, lam, table, seed: int = 0,
                   tau_zero: float = TAU_ZERO) -> SupportReduction:
    """Shrink the support of ``lam`` to at most two by adding PD triple directions.

    For a support triple with witness ``v`` (``Q_v`` positive definite), the
    step ``lam + a0 v`` with ``a0 = min_{v_i < 0} lam_i / (-v_i)`` zeroes at
    least one coordinate.
    """
    lam = check_weights(lam, sys.m).copy()
    rng = np.random.default_rng(seed)
    Qs = sys.Qs
    history = [lam.copy()]
    steps = 0
    while np.count_nonzero(lam) >= 3:
        supp = np.flatnonzero(lam)
        trip = next((t for t in combinations(supp, 3) if table.get(t) is not None), None)
        if trip is None:
            raise MissingWitnessError(f"no PDLC witness for any triple of support {supp.tolist()}",
                                      SupportReduction(lam, steps, history, classify(
                                          np.tensordot(lam, Qs, axes=1)).kind))
        theta = np.asarray(table.get(trip).theta, dtype=float)
        v = np.zeros(sys.m)
        v[list(trip)] = theta
        for _ in range(20):
            negs = np.flatnonzero(v < 0)
            if not len(negs):
                raise ValueError("witness direction is nonnegative: the system is empty")
            ratios = lam[negs] / -v[negs]
            a0 = float(ratios.min())
            cand = lam + a0 * v
            cand[negs[ratios <= a0 * (1 + 1e-12)]] = 0.0
            cand = np.maximum(cand, 0.0)
            if np.any(cand):
                break
            # lam parallel to v: rotate v slightly inside the PD cone
            w = v.copy()
            w[list(trip)] += 1e-6 * np.linalg.norm(theta) * rng.standard_normal(3)
            if min_eig(np.tensordot(w, Qs, axes=1)) > tau_zero:
                v = w
        else:
            raise ArithmeticError("could not perturb the witness direction")
        lam = cand
        steps += 1
        history.append(lam.copy())
    kind = classify(np.tensordot(lam, Qs, axes=1)).kind
    return SupportReduction(lam, steps, history, kind)


# ---------------------------------------------------------------------------
# enumeration

@dataclass
class HullDescription:
    """Aggregations claimed to cut out ``conv(S)`` (or ``G`` in the closed case)."""

    system: QuadraticSystem
    aggregations: list
    verified: Optional[object] = None
    notes: list = field(default_factory=list)
    pruned: list = field(default_factory=list)

    @property
    def weights(self) -> np.ndarray:
        return np.array([a.lam for a in self.aggregations]).reshape(-1, self.system.m)

    def as_system(self) -> QuadraticSystem:
        return QuadraticSystem(tuple(a.function for a in self.aggregations))

    def contains(self, X, margin: float = 0.0) -> np.ndarray:
        return self.as_system().contains(X, margin)

    def __len__(self):
        return len(self.aggregations)


def dedupe_records(records, tol: float = 1e-9) -> list:
    out = []
    for r in records:
        if all(np.max(np.abs(r.lam - o.lam)) > tol for o in out):
            out.append(r)
    return out


def enumerate_hull(sys: QuadraticSystem, samples=None, cfg: SamplerConfig = SamplerConfig(),
                   closed: bool = False) -> HullDescription:
    """Union of the pairwise outermost good endpoints, at most ``m^2 - m`` entries.

    Aggregations whose strict sublevel set is the whole space are dropped.
    """
    if samples is None:
        samples = (sample_T(sys, cfg) if closed else sample_S(sys, cfg)).points
    pairs = list(combinations(range(sys.m), 2))
    if sys.m == 1:
        recs = [make_record(sys, [1.0], "pairwise-endpoint")]
        per_pair = [recs]
    else:
        per_pair = thread_map(lambda p: pairwise_endpoints(sys, p[0], p[1], samples, closed=closed),
                              pairs)
    recs = dedupe_records([r for group in per_pair for r in group])
    kept, pruned = [], []
    for r in recs:
        (pruned if covers_space(r.function) else kept).append(r)
    hull = HullDescription(sys, kept, pruned=pruned)
    assert len(kept) <= max(1, sys.m * sys.m - sys.m)
    return hull
