"""Acceptance gate: one test per criterion, each recording a PASS/FAIL line."""
import time
from itertools import combinations

import numpy as np

from aggrahull import cli, gallery
from aggrahull.certificates import emptiness_certificate, escape_bound, pdlc_witness
from aggrahull.engine import classify, pencil_analysis
from aggrahull.hhc import hhc_falsify, hidden_convexity_falsify
from aggrahull.linalg import max_min_eig, min_eig
from aggrahull.oracle import (SamplerConfig, check_membership_certificate, hull_member, sample_S,
                              sample_T, set_equal_mc, verify_hull)
from aggrahull.qform import QuadraticFunction, QuadraticSystem, aggregate
from aggrahull.special import sphere_hull

from properties import PROPERTIES


def _normalized(rows):
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    return rows / rows.sum(axis=1, keepdims=True)


def _same_weight_sets(got, expected, tol=1e-8):
    got, expected = _normalized(got), _normalized(expected)
    if len(got) != len(expected):
        return False
    used = set()
    for e in expected:
        hit = [i for i, g in enumerate(got) if i not in used and np.max(np.abs(g - e)) <= tol]
        if not hit:
            return False
        used.add(hit[0])
    return True


def _hull_opts(mode, verify=True, samples=10_000):
    return {"seed": 0, "tol": 1e-6, "samples": samples, "mode": mode, "verify": verify,
            "cross_check": False}


def test_criterion_1_four_aggregations(acceptance):
    details, ok = [], True
    for n in (2, 3):
        sys = gallery.four_aggregations(n)
        t0 = time.perf_counter()
        code, report = cli.execute("hull", sys, _hull_opts("pairwise"), quiet=True)
        elapsed = time.perf_counter() - t0
        res = report["results"]
        lams = [a["lambda"] for a in res["aggregations"]]
        ver = res["verification"]
        good = (_same_weight_sets(lams, gallery.FOUR_AGGREGATION_WEIGHTS)
                and len(lams) <= sys.m ** 2 - sys.m
                and ver["status"] == "consistent"
                and ver["checked_inside"] >= 10_000
                and elapsed < 30.0 and code == 0)
        ok &= good
        details.append(f"n={n}: {len(lams)} aggs, {ver['status']}, {elapsed:.1f}s")
    acceptance(1, ok, "; ".join(details))
    assert ok, details


def test_criterion_2_closed_pair(acceptance):
    sys = gallery.closed_pair(2)
    pa = pencil_analysis(sys, 0, 1)
    gevs = sorted((r.value, r.double) for r in pa.gevs)
    gev_ok = (len(gevs) == 2 and abs(gevs[0][0] - 2 / 3) <= 1e-9 and gevs[0][1]
              and abs(gevs[1][0] - 1.0) <= 1e-9)
    code, report = cli.execute("hull", sys, _hull_opts("closed", verify=False), quiet=True)
    lams = [a["lambda"] for a in report["results"]["aggregations"]]
    hull_ok = _same_weight_sets(lams, [(0.0, 1.0), (2.0, 1.0)])
    T = sample_T(sys, SamplerConfig(seed=0))
    e1 = np.array([1.0, 0.0])
    iso = [p for p in T.extra if np.linalg.norm(p - e1) <= 1e-4 and np.max(sys.values(p)) <= 1e-8]
    ok = gev_ok and hull_ok and len(iso) > 0
    acceptance(2, ok, f"gevs={[(round(v, 12), d) for v, d in gevs]}, hull={_normalized(lams).round(9).tolist()}, "
                      f"isolated e1 found={len(iso) > 0}")
    assert ok


def test_criterion_3_three_spheres(acceptance):
    sys = gallery.three_spheres()
    code, report = cli.execute("check", sys, {"seed": 0, "tol": 1e-6, "samples": 10_000}, quiet=True)
    pdlc = report["results"]["pdlc"]
    known_theta = min_eig(np.tensordot(gallery.THREE_SPHERES_PDLC, sys.Qs, axes=1))
    hull = sphere_hull(sys)
    cfg = SamplerConfig(seed=0, n_samples=10_000, margin=1e-6)
    full = hull.as_system()
    subsets = []
    for idx in combinations(range(len(hull)), 3):
        eq = set_equal_mc(full, full.subsystem(idx), cfg)
        if eq.equal:
            subsets.append(idx)
    ok = pdlc["found"] and pdlc["min_eig"] > 0 and known_theta > 0 and len(hull) == 4 and subsets
    acceptance(3, ok, f"PDLC min eig {pdlc['min_eig']:.4g}, known theta min eig {known_theta:.4g}, "
                      f"{len(hull)} candidates, sufficient 3-subsets {subsets}")
    assert ok


def test_criterion_4_parallelogram(acceptance):
    sys = gallery.parallelogram(3)
    ball = max_min_eig(sys.Qs, "ball", seed=0)
    no_pdlc = pdlc_witness(sys) is None and ball.value <= 1e-6
    agg = aggregate(sys, [1.0, 1.0, 1.0])
    cfg = SamplerConfig(seed=0, n_samples=10_000)
    target = np.array([0.6, 0.0, 0.0])
    v = verify_hull(sys, [agg], cfg, probe_points=[target])
    wit = [w for w in v.witnesses if w.kind == "in-agg-not-in-hull"
           and np.linalg.norm(w.x - target) <= 0.05]
    margin = -np.inf
    if wit:
        a = wit[0].separation.a
        S = sample_S(sys, SamplerConfig(seed=1, n_samples=1000)).points
        margin = float(np.min((wit[0].x - S) @ a) / np.linalg.norm(a))
    ok = no_pdlc and v.status == "counterexample-in-agg-not-in-hull" and margin > 1e-3
    acceptance(4, ok, f"ball optimum {ball.value:.2e}, status {v.status}, "
                      f"separation margin vs 1e3 samples {margin:.4f}")
    assert ok


def test_criterion_5_separable(acceptance):
    sys = gallery.separable()
    t0 = time.perf_counter()
    hc = hidden_convexity_falsify(sys, trials=100, seed=0)
    w = hhc_falsify(sys, trials=0, normals=[gallery.SEPARABLE_NORMAL],
                    pairs=[gallery.SEPARABLE_PAIR], seed=0)
    elapsed = time.perf_counter() - t0
    ok = (hc is None and w is not None and np.max(np.abs(w.z - [-1.0, -1.0, 0.0])) <= 1e-9
          and w.residual > 1e-2 and elapsed < 60.0)
    acceptance(5, ok, f"full-space witness: {hc is not None}; hyperplane residual "
                      f"{None if w is None else round(w.residual, 6)}; {elapsed:.1f}s")
    assert ok


def test_criterion_6_orthant_gap(acceptance):
    n = 3
    sys = gallery.orthant_outside_ball(n)
    scc = classify(sys.Qs[0])
    hull = sphere_hull(sys, check_span=False)
    halfspaces = all(np.allclose(r.function.A, 0.0) for r in hull.aggregations)
    lam_ok = _same_weight_sets(hull.weights, np.eye(n + 1)[1:])
    rng = np.random.default_rng(0)
    certified = 0
    for _ in range(100):
        x = rng.uniform(0.05, 2.0, n)
        if x.sum() <= 1.0:
            x *= 1.5 / x.sum()
        mem = hull_member(sys, x, SamplerConfig(seed=0), hints=gallery.orthant_hints(x))
        certified += mem.inside and check_membership_certificate(sys, x, mem.points, mem.weights)
    # the gap: (0.1, 0.1, 0.1) satisfies every good aggregation yet sum(x) < 1 < sum(s) on S
    gap = np.full(n, 0.1)
    gap_in_aggs = bool(hull.contains(gap[None, :])[0])
    ok = (scc.kind == "many-negative" and scc.inertia.neg == n and halfspaces and lam_ok
          and certified == 100 and gap_in_aggs)
    acceptance(6, ok, f"e0 kind {scc.kind} (nu={scc.inertia.neg}), {len(hull)} halfspace aggs, "
                      f"{certified}/100 points certified, gap point in aggs: {gap_in_aggs}")
    assert ok


def test_criterion_7_property_suites(acceptance):
    failed = {}
    for name, check in PROPERTIES.items():
        bad = []
        for seed in range(100):
            try:
                check(seed)
            except AssertionError:
                bad.append(seed)
        if bad:
            failed[name] = bad[:5]
    ok = not failed
    acceptance(7, ok, f"{len(PROPERTIES)} suites x 100 seeds" + (f", failures {failed}" if failed else ""))
    assert ok, failed


def test_criterion_8_certificates(acceptance):
    cert = emptiness_certificate(gallery.empty_ball(2))
    margin = -np.inf if cert is None else cert.margin
    rng = np.random.default_rng(0)
    passed = 0
    for _ in range(100):
        n = int(rng.integers(1, 5))
        m = int(rng.integers(1, 5))
        cons = []
        for _ in range(m):
            G = rng.standard_normal((n, n))
            cons.append(QuadraticFunction(-(G @ G.T + 0.1 * np.eye(n)), rng.standard_normal(n),
                                          float(rng.normal(0, 3))))
        sys = QuadraticSystem(tuple(cons))
        x = rng.normal(0, 2, n)
        v = rng.standard_normal(n)
        v /= np.linalg.norm(v)
        M = escape_bound(sys, x, v)
        passed += bool(sys.contains(x + M * v) and sys.contains(x - M * v))
    ok = margin >= 1 - 1e-6 and passed == 100
    acceptance(8, ok, f"emptiness margin {margin:.9f}, escape bound {passed}/100")
    assert ok
