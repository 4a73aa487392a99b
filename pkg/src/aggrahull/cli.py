"""Command-line interface: ``aggrahull check|hull|falsify-hhc|replay``.

Every command can write a JSON report (``--out``) that embeds the input
system, the seed and all options, so ``aggrahull replay report.json``
re-runs it and compares the results.

Exit codes: 0 success, 1 verification counterexample (or replay mismatch),
2 input error, 3 precondition failure.
"""
from __future__ import annotations

import argparse
import json
import sys as _sys
import time
import warnings
from importlib import resources
from pathlib import Path

import numpy as np

from . import __version__
from .certificates import emptiness_certificate, hull_is_rn, pdlc_witness, triple_pdlc_table
from .engine import enumerate_hull
from .hhc import hhc_falsify, hhc_structural
from .io import SystemFileError, load_system, system_digest, system_from_dict, system_to_dict, to_jsonable
from .oracle import SamplerConfig, SamplingError, sample_S, sample_T, set_equal_mc, verify_hull
from .qform import PreconditionError, detect_diagonal, detect_sphere_structure
from .special import closed_hull, diagonal_hull, sphere_hull, sphere_rn_test

EXIT_OK, EXIT_COUNTEREXAMPLE, EXIT_INPUT, EXIT_PRECONDITION = 0, 1, 2, 3
MODES = ("auto", "pairwise", "sphere", "diagonal", "closed")


def schema() -> dict:
    text = resources.files("aggrahull").joinpath("schema/report.schema.json").read_text()
    return json.loads(text)


def validate_report(report: dict) -> None:
    import jsonschema

    jsonschema.validate(report, schema())


def _config(opts: dict) -> SamplerConfig:
    return SamplerConfig(seed=opts["seed"], n_samples=opts["samples"], margin=opts["tol"])


def _say(msg: str, quiet: bool) -> None:
    if not quiet:
        print(msg)


# ---------------------------------------------------------------------------
# commands; each returns (exit code, results dict)

def run_check(system, opts: dict, quiet: bool = False):
    seed = opts["seed"]
    res = {"structure": {
        "n": system.n, "m": system.m,
        "all_strict": system.all_strict, "all_closed": system.all_closed,
        "sphere_type": detect_sphere_structure(system) is not None,
        "diagonal": detect_diagonal(system),
    }}
    if system.all_strict:
        cert = emptiness_certificate(system, seed=seed)
        res["emptiness"] = {"certified_empty": cert is not None,
                            "lam": None if cert is None else cert.lam,
                            "margin": None if cert is None else cert.margin}
        _say("S is empty: Q_lambda >= 0 for lambda = " + np.array2string(cert.lam, precision=6)
             if cert is not None else "no emptiness certificate", quiet)
    else:
        res["emptiness"] = {"certified_empty": False, "lam": None, "margin": None,
                            "note": "emptiness test needs an all-strict system"}
    cfg = _config(opts)
    try:
        smp = (sample_S if system.all_strict else sample_T)(system, SamplerConfig(
            seed=seed, n_samples=100, margin=cfg.margin))
        res["sample_point"] = smp.points[0]
        _say(f"nonempty: sampled point {np.array2string(smp.points[0], precision=6)}", quiet)
    except SamplingError:
        res["sample_point"] = None
    w = pdlc_witness(system, seed=seed)
    res["pdlc"] = {"found": w is not None, "theta": None if w is None else w.theta,
                   "min_eig": None if w is None else w.min_eig}
    _say(f"PDLC witness theta = {np.array2string(w.theta, precision=6)}, min eig {w.min_eig:.6g}"
         if w is not None else "PDLC absent (no positive definite combination found)", quiet)
    if system.m >= 3:
        table = triple_pdlc_table(system, seed=seed)
        res["triple_pdlc"] = {"with_witness": len(table), "failed": table.failed}
    rn = hull_is_rn(system, seed=seed)
    res["hull_is_rn"] = {"value": rn.value, "reason": rn.reason,
                         "direction": None if rn.recession.witness is None else rn.recession.witness.v,
                         "lam": rn.lam}
    _say(f"conv(S) = R^n: {rn.value} ({rn.reason})", quiet)
    st = hhc_structural(system, seed=seed)
    if st.verdict == "unknown" and opts.get("falsify"):
        wit = hhc_falsify(system, trials=opts["trials"], seed=seed)
        if wit is not None:
            st.verdict = "falsified"
            st.evidence["witness"] = wit
    res["hhc"] = {"verdict": st.verdict, "evidence": {k: v for k, v in st.evidence.items()
                                                      if k != "family"}}
    _say(f"HHC: {st.verdict}", quiet)
    return EXIT_OK, res


def _route(system, mode: str) -> str:
    if mode != "auto":
        return mode
    if system.all_closed:
        return "closed"
    if detect_diagonal(system):
        return "diagonal"
    if detect_sphere_structure(system) is not None:
        return "sphere"
    return "pairwise"


def _records(hull) -> list:
    return [{"lambda": r.lam, "kind": r.kind, "provenance": r.provenance,
             "pair": None if r.pair is None else list(r.pair), "alpha": r.alpha,
             "function": r.function} for r in hull.aggregations]


def _verdict(v) -> dict:
    return {"status": v.status, "unresolved": len(v.unresolved),
            "checked_inside": v.checked_inside, "checked_aggregation": v.checked_aggregation,
            "witnesses": [{"kind": w.kind, "x": w.x, "value": w.value, "aggregation": w.aggregation,
                           "points": w.points, "weights": w.weights,
                           "separation": None if w.separation is None else
                           {"a": w.separation.a, "margin": w.separation.margin,
                            "n_points": w.separation.n_points}}
                          for w in v.witnesses]}


def run_hull(system, opts: dict, quiet: bool = False):
    seed = opts["seed"]
    cfg = _config(opts)
    mode = _route(system, opts["mode"])
    res = {"mode": mode, "notes": []}
    samples = extra = None
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        if mode == "closed":
            out = closed_hull(system, cfg)
            hull, extra = out.hull, out.isolated
            res["isolated_points"] = extra
        elif mode == "diagonal":
            hull = diagonal_hull(system)
        elif mode == "sphere":
            if not sphere_rn_test(system):
                raise PreconditionError("conv(S) is all of R^n (no P constraint and every "
                                        "Z constraint is a negative constant)")
            hull = sphere_hull(system, seed=seed)
        elif mode == "pairwise":
            if system.all_strict and emptiness_certificate(system, seed=seed) is not None:
                raise PreconditionError("S is empty (emptiness certificate found); run `check`")
            rn = hull_is_rn(system, seed=seed)
            if rn.value:
                raise PreconditionError("conv(S) is all of R^n (recession direction found)")
            if pdlc_witness(system, seed=seed) is None and system.m >= 3:
                res["notes"].append("PDLC absent; pairwise completeness not guaranteed, "
                                    "emitting candidates with warning")
            try:
                samples = (sample_S(system, cfg) if not system.all_closed
                           else sample_T(system, cfg)).points
            except SamplingError as e:
                raise PreconditionError(f"no points of S were found: {e}") from None
            hull = enumerate_hull(system, samples, cfg)
        else:
            raise ValueError(f"unknown mode {mode!r}")
    res["notes"] += list(hull.notes) + [str(w.message) for w in caught
                                        if str(w.message) not in hull.notes]
    if not hull.aggregations:
        res["notes"].append("no aggregation was found; the description is all of R^n")
    res["aggregations"] = _records(hull)
    res["pruned"] = len(hull.pruned)
    for note in res["notes"]:
        print(f"warning: {note}", file=_sys.stderr)
    _say(f"{len(hull)} aggregation(s) [{mode}]", quiet)
    for r in hull.aggregations:
        _say("  lambda = " + np.array2string(r.lam, precision=8), quiet)
    if opts.get("cross_check") and mode == "sphere":
        pw = enumerate_hull(system, sample_S(system, cfg).points, cfg)
        eq = set_equal_mc(hull.as_system(), pw.as_system(), cfg)
        res["cross_check"] = {"pairwise_count": len(pw), "equal": eq.equal}
    code = EXIT_OK
    if opts.get("verify"):
        v = verify_hull(system, hull, cfg, samples=samples, hints=extra)
        res["verification"] = _verdict(v)
        _say(f"verification: {v.status} ({len(v.unresolved)} unresolved)", quiet)
        if v.status.startswith("counterexample"):
            code = EXIT_COUNTEREXAMPLE
    return code, res


def run_falsify(system, opts: dict, quiet: bool = False):
    normals = [np.array(a, dtype=float) for a in opts.get("normals") or []]
    for a in normals:
        if len(a) != system.n + 1:
            raise SystemFileError(f"--normal needs {system.n + 1} entries (homogenized space)")
    w = hhc_falsify(system, trials=opts["trials"], restarts=opts["restarts"], seed=opts["seed"],
                    normals=normals)
    res = {"trials": opts["trials"], "witness": None if w is None else {
        "normal": w.normal, "x": w.x, "y": w.y, "z": w.z, "residual": w.residual,
        "threshold": w.threshold, "best_w": w.best_w}}
    if w is None:
        _say(f"no witness in {opts['trials']} random hyperplanes (plus structured ones)", quiet)
    else:
        _say(f"HHC falsified: hyperplane normal {np.array2string(w.normal, precision=6)}, "
             f"z = {np.array2string(w.z, precision=6)}, residual {w.residual:.4g}", quiet)
    return EXIT_OK, res


COMMANDS = {"check": run_check, "hull": run_hull, "falsify-hhc": run_falsify}


def execute(command: str, system, opts: dict, quiet: bool = False):
    t0 = time.perf_counter()
    code, results = COMMANDS[command](system, opts, quiet)
    report = {
        "command": command,
        "version": __version__,
        "input": {"digest": system_digest(system), "system": system_to_dict(system)},
        "seed": opts["seed"],
        "options": opts,
        "results": to_jsonable(results),
        "exit_code": code,
        "timings": {"total_seconds": time.perf_counter() - t0},
    }
    return code, report


def _compare(a, b, path="results", rtol=1e-9):
    """Differences between two JSON payloads (numbers compared with ``rtol``)."""
    if isinstance(a, dict) and isinstance(b, dict):
        out = []
        for k in sorted(set(a) | set(b)):
            if k not in a or k not in b:
                out.append(f"{path}.{k}: present in only one report")
            else:
                out += _compare(a[k], b[k], f"{path}.{k}", rtol)
        return out
    if isinstance(a, list) and isinstance(b, list):
        if len(a) != len(b):
            return [f"{path}: length {len(a)} vs {len(b)}"]
        return [d for i, (x, y) in enumerate(zip(a, b)) for d in _compare(x, y, f"{path}[{i}]", rtol)]
    if isinstance(a, (int, float)) and isinstance(b, (int, float)) and not isinstance(a, bool):
        if abs(a - b) <= rtol * max(1.0, abs(a), abs(b)):
            return []
        return [f"{path}: {a} vs {b}"]
    return [] if a == b else [f"{path}: {a!r} vs {b!r}"]


def run_replay(path, quiet: bool = False):
    try:
        report = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as e:
        raise SystemFileError(f"{path}: cannot read report ({e})") from None
    import jsonschema

    try:
        validate_report(report)
    except jsonschema.ValidationError as e:
        raise SystemFileError(f"{path}: not a valid report ({e.message})") from None
    system = system_from_dict(report["input"]["system"])
    if system_digest(system) != report["input"]["digest"]:
        raise SystemFileError(f"{path}: input digest does not match the embedded system")
    code, fresh = execute(report["command"], system, report["options"], quiet=True)
    diffs = _compare(report["results"], fresh["results"])
    if code != report["exit_code"]:
        diffs.append(f"exit_code: {report['exit_code']} vs {code}")
    if diffs:
        for d in diffs:
            print(f"mismatch {d}")
        return EXIT_COUNTEREXAMPLE
    _say(f"replay of {report['command']} reproduced the report", quiet)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aggrahull",
                                description="Convex hulls of quadratically constrained sets "
                                            "via aggregations.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("system", help="system file (JSON)")
        sp.add_argument("--seed", type=int, default=0)
        sp.add_argument("--tol", type=float, default=1e-6,
                        help="relative sampling margin (points need f_i < -tol * scale)")
        sp.add_argument("--samples", type=int, default=10_000)
        sp.add_argument("--out", help="write the JSON report here")
        sp.add_argument("--quiet", action="store_true")

    c = sub.add_parser("check", help="emptiness, PDLC, R^n and HHC diagnostics")
    common(c)
    c.add_argument("--falsify", action="store_true",
                   help="run the HHC falsifier when no structural class applies")
    c.add_argument("--trials", type=int, default=100)
    h = sub.add_parser("hull", help="compute the aggregations describing the hull")
    common(h)
    h.add_argument("--mode", choices=MODES, default="auto")
    h.add_argument("--verify", action="store_true", help="sampling-based verification")
    h.add_argument("--cross-check", action="store_true",
                   help="sphere mode: compare with the pairwise enumeration")
    f = sub.add_parser("falsify-hhc", help="search for a hyperplane with nonconvex image")
    common(f)
    f.add_argument("--trials", type=int, default=100)
    f.add_argument("--restarts", type=int, default=8)
    f.add_argument("--normal", action="append", type=lambda s: [float(t) for t in s.split(",")],
                   dest="normals", help="extra hyperplane normal in homogenized space, "
                                        "comma separated (repeatable)")
    r = sub.add_parser("replay", help="re-run a report and compare")
    r.add_argument("report")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "replay":
            return run_replay(args.report)
        system = load_system(args.system)
        opts = {k: v for k, v in vars(args).items()
                if k not in ("command", "system", "out", "quiet")}
        code, report = execute(args.command, system, opts, args.quiet)
        if args.out:
            validate_report(report)
            Path(args.out).write_text(json.dumps(report, indent=2) + "\n")
        return code
    except SystemFileError as e:
        print(f"input error: {e}", file=_sys.stderr)
        return EXIT_INPUT
    except PreconditionError as e:
        print(f"precondition failed: {e}", file=_sys.stderr)
        return EXIT_PRECONDITION


if __name__ == "__main__":
    raise SystemExit(main())
