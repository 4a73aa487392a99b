"""Sampling-based ground truth for quadratic sets and their hulls.

Points of ``S`` (or of the closed set ``T``) come from rejection sampling in
an adaptively sized box, seeded by local minimisation of ``max_i f_i``.
Membership in ``conv(S)`` is certified by explicit convex combinations, and
non-membership by separating linear functionals; nothing is reported
without a checkable witness.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import linprog, minimize

from .linalg import TAU_ZERO
from .qform import QuadraticFunction, QuadraticSystem

DELTA_S = 1e-6


class SamplingError(RuntimeError):
    """No point of the set was found within the draw budget."""


@dataclass(frozen=True)
class SamplerConfig:
    box_half_width: float = 1.0
    seed: int = 0
    max_draws: int = 2_000_000
    n_samples: int = 10_000
    growth: float = 2.0
    max_growth_steps: int = 10
    batch: int = 20_000
    min_hits: int = 50
    margin: float = DELTA_S
    optimizer_starts: int = 16
    attacks: int = 1_000
    pool_size: int = 2_000

    def with_seed(self, seed: int) -> "SamplerConfig":
        return replace(self, seed=int(seed))


@dataclass
class SampleResult:
    points: np.ndarray
    hit_rate: float
    lo: np.ndarray
    hi: np.ndarray
    draws: int
    extra: np.ndarray = None

    def __len__(self):
        return len(self.points)


def _grad_values(sys: QuadraticSystem, x: np.ndarray):
    As = sys.As
    bs = np.stack([f.b for f in sys])
    vals = sys.values(x)
    grads = 2.0 * (As @ x + bs)
    return vals, grads


def minimax_points(sys: QuadraticSystem, starts: np.ndarray, lo, hi) -> list:
    """Local minimisers of ``max_i f_i`` over a box, one per start.

    Returns ``(x, value)`` pairs, solved as ``min t s.t. f_i(x) <= t``.
    """
    n = sys.n
    scale = sys.scale
    out = []
    bounds = [(l, h) for l, h in zip(lo, hi)] + [(-1e6 * scale, None)]

    def cons_fun(z):
        return z[-1] - sys.values(z[:-1])

    def cons_jac(z):
        _, g = _grad_values(sys, z[:-1])
        return np.hstack([-g, np.ones((sys.m, 1))])

    obj_grad = np.zeros(n + 1)
    obj_grad[-1] = 1.0
    for x0 in starts:
        z0 = np.concatenate([x0, [np.max(sys.values(x0)) + 1.0]])
        try:
            res = minimize(lambda z: z[-1], z0, jac=lambda z: obj_grad, method="SLSQP",
                           bounds=bounds,
                           constraints=[{"type": "ineq", "fun": cons_fun, "jac": cons_jac}],
                           options={"maxiter": 300, "ftol": 1e-15})
        except (ValueError, np.linalg.LinAlgError):
            continue
        x = np.clip(res.x[:-1], lo, hi)
        out.append((x, float(np.max(sys.values(x)))))
    return out


def _hits(sys: QuadraticSystem, X: np.ndarray, margin: float, closed: bool) -> np.ndarray:
    V = sys.values(X)
    if closed:
        return np.all(V <= 0.0, axis=1)
    return np.all(V < -margin, axis=1)


def _sample(sys: QuadraticSystem, cfg: SamplerConfig, closed: bool) -> SampleResult:
    rng = np.random.default_rng(cfg.seed)
    n = sys.n
    margin = cfg.margin * sys.scale
    draws = 0
    w = cfg.box_half_width
    cap = cfg.box_half_width * cfg.growth ** cfg.max_growth_steps
    hits = np.empty((0, n))
    seeds = []
    # locate the set: grow a centred box, helped by local minimisation
    for step in range(cfg.max_growth_steps + 1):
        lo, hi = -w * np.ones(n), w * np.ones(n)
        X = rng.uniform(lo, hi, size=(cfg.batch, n))
        draws += cfg.batch
        hits = np.vstack([hits, X[_hits(sys, X, margin, closed)]])
        if cfg.optimizer_starts and len(hits) < cfg.min_hits:
            starts = rng.uniform(lo, hi, size=(cfg.optimizer_starts, n))
            for x, val in minimax_points(sys, starts, lo, hi):
                if val < -margin:
                    seeds.append(x)
        if len(hits) or seeds:
            break
        w *= cfg.growth
    if not len(hits) and not seeds:
        raise SamplingError(f"no point found in the box of half-width {w:g} "
                            f"after {draws} draws")
    anchor = np.vstack([hits] + ([np.array(seeds)] if seeds else []))
    lo, hi = anchor.min(axis=0), anchor.max(axis=0)
    ext = np.maximum(hi - lo, 1e-3 * w)
    lo, hi = np.maximum(lo - 0.5 * ext, -cap), np.minimum(hi + 0.5 * ext, cap)
    # adapt: push out faces that the hits come close to
    for _ in range(12):
        X = rng.uniform(lo, hi, size=(cfg.batch, n))
        draws += cfg.batch
        H = X[_hits(sys, X, margin, closed)]
        if not len(H):
            break
        width = hi - lo
        near_lo = (H.min(axis=0) - lo < 0.05 * width) & (lo > -cap)
        near_hi = (hi - H.max(axis=0) < 0.05 * width) & (hi < cap)
        if not (near_lo.any() or near_hi.any()):
            break
        lo = np.where(near_lo, np.maximum(lo - width, -cap), lo)
        hi = np.where(near_hi, np.minimum(hi + width, cap), hi)
    # collect
    pts = []
    got = 0
    tried = 0
    while got < cfg.n_samples and draws < cfg.max_draws:
        X = rng.uniform(lo, hi, size=(cfg.batch, n))
        draws += cfg.batch
        tried += cfg.batch
        H = X[_hits(sys, X, margin, closed)]
        pts.append(H)
        got += len(H)
    P = np.vstack(pts) if pts else np.empty((0, n))
    if len(P) == 0:
        P = np.array(seeds) if seeds else hits
    P = P[: cfg.n_samples]
    rate = got / tried if tried else 0.0
    return SampleResult(P, rate, lo, hi, draws, np.array(seeds).reshape(-1, n))


def sample_S(sys: QuadraticSystem, cfg: SamplerConfig = SamplerConfig()) -> SampleResult:
    """Rejection sample ``{x : f_i(x) < -margin * scale for all i}``."""
    return _sample(sys, cfg, closed=False)


def sample_T(sys: QuadraticSystem, cfg: SamplerConfig = SamplerConfig(), starts: int = 64,
             tau_zero: float = 1e-8) -> SampleResult:
    """Sample ``{x : f_i(x) <= 0}`` including low-dimensional pieces.

    Rejection hits are complemented by local minimisers of ``max_i f_i``
    whose value is at most ``tau_zero``; these catch isolated points and
    other pieces of measure zero.  The minimisers are returned in ``extra``.
    """
    try:
        res = _sample(sys, cfg, closed=True)
    except SamplingError:
        res = None
    rng = np.random.default_rng([cfg.seed, 7])
    n = sys.n
    w = cfg.box_half_width * 4
    if res is not None:
        lo = np.minimum(res.lo, -w)
        hi = np.maximum(res.hi, w)
    else:
        lo, hi = -w * np.ones(n), w * np.ones(n)
    X0 = rng.uniform(lo, hi, size=(starts, n))
    mins = [x for x, v in minimax_points(sys, X0, lo, hi) if v <= tau_zero]
    extra = _dedupe(np.array(mins).reshape(-1, n))
    if res is None:
        if not len(extra):
            raise SamplingError("no point of T found")
        return SampleResult(extra, 0.0, lo, hi, 0, extra)
    res.points = np.vstack([res.points, extra])
    res.extra = extra
    return res


def _dedupe(X: np.ndarray, tol: float = 1e-7) -> np.ndarray:
    keep = []
    for x in X:
        if all(np.max(np.abs(x - y)) > tol for y in keep):
            keep.append(x)
    return np.array(keep).reshape(-1, X.shape[1] if X.ndim == 2 else 0)


# ---------------------------------------------------------------------------
# convex-hull membership

@dataclass
class MembershipResult:
    """``inside`` comes with points of ``S`` and weights reproducing ``x``."""

    status: str
    points: np.ndarray = None
    weights: np.ndarray = None
    method: str = ""

    @property
    def inside(self) -> bool:
        return self.status == "inside"


def _in_system(sys: QuadraticSystem, P, closed_slack: float = 0.0) -> np.ndarray:
    """Membership with closed rows relaxed to ``f_i <= closed_slack``."""
    if closed_slack <= 0.0:
        return sys.contains(P)
    V = sys.values(P)
    strict = np.array([f.strict for f in sys])
    return np.all(np.where(strict, V < 0, V <= closed_slack), axis=-1)


def check_membership_certificate(sys: QuadraticSystem, x, points, weights,
                                 tol: float = 1e-9, closed_slack: float = 0.0) -> bool:
    x = np.asarray(x, dtype=float)
    P = np.atleast_2d(np.asarray(points, dtype=float))
    w = np.asarray(weights, dtype=float)
    if len(w) != len(P) or len(P) > sys.n + 1:
        return False
    if np.any(w < 0) or abs(w.sum() - 1.0) > tol:
        return False
    if not np.all(_in_system(sys, P, closed_slack)):
        return False
    return bool(np.max(np.abs(w @ P - x)) <= tol * max(1.0, np.max(np.abs(x))))


def _lp_combination(sys, x, P, closed_slack: float = 0.0) -> Optional[MembershipResult]:
    N, n = P.shape
    A_eq = np.vstack([P.T, np.ones((1, N))])
    b_eq = np.concatenate([x, [1.0]])
    res = linprog(np.zeros(N), A_eq=A_eq, b_eq=b_eq, bounds=[(0, None)] * N,
                  method="highs")
    if res.status != 0:
        return None
    supp = np.flatnonzero(res.x > 1e-12)
    if len(supp) > n + 1:
        supp = np.argsort(-res.x)[: n + 1]
    # re-solve on the support to push the residual to rounding level
    B = A_eq[:, supp]
    w, *_ = np.linalg.lstsq(B, b_eq, rcond=None)
    if np.any(w < 0):
        w = np.maximum(res.x[supp], 0.0)
        w = w / w.sum()
    if check_membership_certificate(sys, x, P[supp], w, closed_slack=closed_slack):
        return MembershipResult("inside", P[supp], w, "lp")
    return None


def _ray_combination(sys, x, dirs, tmax, margin) -> Optional[MembershipResult]:
    ts = np.geomspace(1e-4, tmax, 80)
    for d in dirs:
        d = d / np.linalg.norm(d)
        plus = x + ts[:, None] * d
        minus = x - ts[:, None] * d
        hp = np.flatnonzero(sys.contains(plus, margin))
        hm = np.flatnonzero(sys.contains(minus, margin))
        if len(hp) and len(hm):
            t1, t2 = ts[hp[0]], ts[hm[0]]
            pts = np.array([x + t1 * d, x - t2 * d])
            w = np.array([t2, t1]) / (t1 + t2)
            if check_membership_certificate(sys, x, pts, w):
                return MembershipResult("inside", pts, w, "ray")
    return None


def hull_member(sys: QuadraticSystem, x, cfg: SamplerConfig = SamplerConfig(),
                pool: Optional[np.ndarray] = None, hints: Optional[np.ndarray] = None,
                directions: int = 200) -> MembershipResult:
    """Try to write ``x`` as a convex combination of at most ``n + 1`` points of ``S``.

    One-sided: a failure yields ``unknown``, never ``outside``.  For systems
    with closed rows, hint points may sit on the boundary (``f_i <= tau * scale``),
    which admits isolated points of ``T`` found by :func:`sample_T`.
    """
    x = np.asarray(x, dtype=float)
    n = sys.n
    margin = cfg.margin * sys.scale
    if sys.contains(x, margin):
        return MembershipResult("inside", x[None, :].copy(), np.ones(1), "point")
    slack = 0.0 if sys.all_strict else TAU_ZERO * sys.scale
    cands = []
    if hints is not None and len(hints):
        H = np.atleast_2d(np.asarray(hints, dtype=float))
        cands.append(H[_in_system(sys, H, slack)])
    if pool is not None and len(pool):
        cands.append(np.asarray(pool, dtype=float)[: cfg.pool_size])
    P = np.vstack(cands) if cands else np.empty((0, n))
    if len(P) >= 1:
        got = _lp_combination(sys, x, P, slack)
        if got is not None:
            return got
    rng = np.random.default_rng(cfg.seed)
    D = rng.standard_normal((directions, n))
    if len(P):
        D = np.vstack([P[: directions] - x, D])
    tmax = cfg.box_half_width * cfg.growth ** cfg.max_growth_steps
    got = _ray_combination(sys, x, D, tmax, margin)
    if got is not None:
        return got
    return MembershipResult("unknown")


# ---------------------------------------------------------------------------
# separation and hull verification

@dataclass
class Separation:
    """``a^T (x - s) >= margin * ||a||`` for every pooled sample ``s``."""

    a: np.ndarray
    margin: float
    n_points: int


def separate(x, P: np.ndarray) -> Separation:
    """Maximise the normalised gap ``min_k a^T (x - s_k)`` over a box of ``a``."""
    x = np.asarray(x, dtype=float)
    N, n = P.shape
    # variables (a, t): maximise t subject to t - a^T (x - s_k) <= 0
    D = x[None, :] - P
    A_ub = np.hstack([-D, np.ones((N, 1))])
    res = linprog(np.concatenate([np.zeros(n), [-1.0]]), A_ub=A_ub, b_ub=np.zeros(N),
                  bounds=[(-1, 1)] * n + [(None, None)], method="highs")
    if res.status != 0:
        return Separation(np.zeros(n), -np.inf, N)
    a = res.x[:n]
    na = np.linalg.norm(a)
    if na == 0:
        return Separation(a, 0.0, N)
    return Separation(a / na, float(np.min(D @ a) / na), N)


def _last_inside(sys: QuadraticSystem, s0, s1, iters: int = 60) -> np.ndarray:
    """Farthest point of the segment ``[s0, s1]`` found in ``S`` by bisection (``s0`` in ``S``)."""
    if sys.contains(s1):
        return np.asarray(s1, dtype=float)
    lo, hi = 0.0, 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if sys.contains(s0 + mid * (s1 - s0)):
            lo = mid
        else:
            hi = mid
    return s0 + lo * (s1 - s0)


def _refute_separation(sys: QuadraticSystem, a, x, P, starts: int = 8):
    """Local maximisation of ``a^T s`` over ``S`` from the best pooled points.

    Returns ``(s, found)`` where ``s`` (or None) is a point of ``S`` with
    ``a^T s >= a^T x`` and ``found`` collects every improved point.
    """
    top = P[np.argsort(-(P @ a))[:starts]]
    slack = 1e-7 * sys.scale
    cons = {"type": "ineq", "fun": lambda s: -sys.values(s) - slack,
            "jac": lambda s: -_grad_values(sys, s)[1]}
    found = []
    for s0 in top:
        try:
            res = minimize(lambda s: -(a @ s), s0, jac=lambda s: -a, method="SLSQP",
                           constraints=[cons], options={"maxiter": 200})
        except (ValueError, np.linalg.LinAlgError):
            continue
        s = _last_inside(sys, s0, res.x)
        if a @ s <= a @ s0:
            continue
        found.append(s)
        if a @ s >= a @ x:
            return s, np.array(found)
    return None, np.array(found).reshape(-1, len(a))


def _attack(sys, z, cfg, pool, hints, tol, rounds):
    """Certify ``z`` inside ``conv(S)`` or separate it, growing the pool with
    support points of ``S`` in the separating directions."""
    extra = np.empty((0, sys.n))
    if hints is not None and len(hints):
        H = np.atleast_2d(np.asarray(hints, dtype=float))
        slack = 0.0 if sys.all_strict else TAU_ZERO * sys.scale
        extra = H[_in_system(sys, H, slack)]
    sep = None
    for _ in range(rounds):
        P = np.vstack([extra, pool])
        mem = hull_member(sys, z, cfg, pool=_local_pool(P, z, len(extra)), hints=hints,
                          directions=40 if not len(extra) else 0)
        if mem.inside:
            return "inside", mem
        sep = separate(z, np.vstack([extra, pool[:1000]]))
        if sep.margin <= tol:
            return "unresolved", sep
        refute, found = _refute_separation(sys, sep.a, z, P)
        if len(found):
            extra = np.vstack([found, extra])
        if refute is None:
            sep = separate(z, np.vstack([extra, pool[:1000]]))
            if sep.margin <= tol:
                return "unresolved", sep
            return "separated", sep
    return "unresolved", sep


def _local_pool(P, z, keep_first, k_near: int = 300, k_rand: int = 200):
    """Nearest pooled points to ``z`` plus a spread of the rest."""
    if len(P) <= keep_first + k_near + k_rand:
        return P
    head, rest = P[:keep_first], P[keep_first:]
    d = np.sum((rest - z) ** 2, axis=1)
    near = np.argpartition(d, k_near)[:k_near]
    far = np.setdiff1d(np.arange(len(rest)), near)[:: max(1, (len(rest) - k_near) // k_rand)]
    return np.vstack([head, rest[near], rest[far]])


@dataclass
class HullWitness:
    kind: str
    x: np.ndarray
    value: float = 0.0
    aggregation: int = -1
    points: np.ndarray = None
    weights: np.ndarray = None
    separation: Separation = None


@dataclass
class HullVerdict:
    status: str
    witnesses: list = field(default_factory=list)
    unresolved: list = field(default_factory=list)
    checked_inside: int = 0
    checked_aggregation: int = 0

    @property
    def consistent(self) -> bool:
        return self.status == "consistent"


def _as_functions(hull) -> list:
    aggs = getattr(hull, "aggregations", hull)
    out = []
    for a in aggs:
        f = getattr(a, "function", a)
        if not isinstance(f, QuadraticFunction):
            raise TypeError("hull entries must be quadratic functions or aggregation records")
        out.append(f)
    return out


def verify_hull(sys: QuadraticSystem, hull, cfg: SamplerConfig = SamplerConfig(),
                probe_points: Optional[Sequence] = None, samples: Optional[np.ndarray] = None,
                n_witness: int = 10, hints: Optional[np.ndarray] = None,
                rounds: int = 12) -> HullVerdict:
    """Two-sided sampling test of ``conv(S) == intersection of the aggregations``.

    (a) Points of ``S`` and midpoints of pairs of them (certified members of
    ``conv(S)``) must satisfy every aggregation.  (b) Points of the
    aggregation intersection are attacked with :func:`hull_member`; those
    that resist are separated from the sampled ``S`` by a linear functional,
    which is then challenged by local maximisation over ``S``.
    """
    funcs = _as_functions(hull)
    rng = np.random.default_rng(cfg.seed)
    if samples is None:
        samples = sample_S(sys, cfg).points
    P = np.asarray(samples)
    verdict = HullVerdict("consistent")
    if not funcs:
        # an empty description claims all of R^n: probe a box around the samples
        n = sys.n
        zero = QuadraticFunction(np.zeros((n, n)), np.zeros(n), -1.0)
        lo, hi = P.min(axis=0), P.max(axis=0)
        w = np.maximum(hi - lo, 1.0)
        box = rng.uniform(lo - w, hi + w, size=(cfg.attacks, n))
        probe_points = box if probe_points is None else np.vstack([probe_points, box])
        funcs = [zero]
    agg_sys = QuadraticSystem(tuple(QuadraticFunction(f.A, f.b, f.c, True) for f in funcs))
    tol = cfg.margin * max(sys.scale, agg_sys.scale)
    # (a)
    k = len(P)
    pairs = rng.integers(0, k, size=(k, 2))
    mids = 0.5 * (P[pairs[:, 0]] + P[pairs[:, 1]])
    for X, is_mid in ((P, False), (mids, True)):
        V = agg_sys.values(X)
        bad = np.argwhere(V >= tol)
        verdict.checked_inside += len(X)
        for r, j in bad[:n_witness]:
            if is_mid:
                pts = P[pairs[r]]
                w = np.array([0.5, 0.5])
            else:
                pts, w = X[r][None, :], np.ones(1)
            verdict.witnesses.append(HullWitness("in-hull-not-in-agg", X[r], float(V[r, j]),
                                                 int(j), pts, w))
        if verdict.witnesses:
            verdict.status = "counterexample-in-hull-not-in-agg"
            return verdict
    # (b)
    probes = []
    if probe_points is not None and len(probe_points):
        Z = np.atleast_2d(np.asarray(probe_points, dtype=float))
        probes.append(Z[agg_sys.contains(Z, tol)])
    try:
        acfg = replace(cfg, seed=int(rng.integers(2**31)), n_samples=cfg.attacks)
        probes.append(sample_S(agg_sys, acfg).points)
    except SamplingError:
        pass
    Z = np.vstack(probes) if probes else np.empty((0, sys.n))
    pool = P[rng.permutation(len(P))[: cfg.pool_size]]
    for z in Z[: cfg.attacks]:
        verdict.checked_aggregation += 1
        kind, info = _attack(sys, z, cfg, pool, hints, tol, rounds)
        if kind == "inside":
            continue
        if kind == "unresolved":
            verdict.unresolved.append(z)
            continue
        verdict.witnesses.append(HullWitness("in-agg-not-in-hull", z,
                                             float(np.max(agg_sys.values(z))), -1,
                                             separation=info))
        if len(verdict.witnesses) >= n_witness:
            break
    if verdict.witnesses:
        verdict.status = "counterexample-in-agg-not-in-hull"
    return verdict


# ---------------------------------------------------------------------------
# set comparison

@dataclass
class SetEquality:
    equal: bool
    only_first: np.ndarray
    only_second: np.ndarray
    max_margin_first: float
    max_margin_second: float


def set_equal_mc(desc1: QuadraticSystem, desc2: QuadraticSystem,
                 cfg: SamplerConfig = SamplerConfig()) -> SetEquality:
    """Sample each set and look for points of one lying outside the other by a margin."""
    def as_open(d):
        return QuadraticSystem(tuple(QuadraticFunction(f.A, f.b, f.c, True) for f in d))

    d1, d2 = as_open(desc1), as_open(desc2)
    tol = cfg.margin * max(d1.scale, d2.scale)
    out = []
    for a, b, s in ((d1, d2, cfg.seed), (d2, d1, cfg.seed + 1)):
        try:
            X = sample_S(a, cfg.with_seed(s)).points
        except SamplingError:
            X = np.empty((0, a.n))
        viol = np.max(b.values(X), axis=1) if len(X) else np.empty(0)
        bad = viol >= tol
        order = np.argsort(-viol[bad])
        out.append((X[bad][order][:10], float(viol.max()) if len(viol) else -np.inf))
    return SetEquality(not len(out[0][0]) and not len(out[1][0]),
                       out[0][0], out[1][0], out[0][1], out[1][1])
