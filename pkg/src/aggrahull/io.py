"""JSON system files and report serialization.

A system file looks like::

    {"n": 2,
     "constraints": [
        {"name": "disk", "A": [[1, 0], [0, 1]], "linear": [-2, 0], "c": 0, "strict": true}
     ]}

``linear`` is the full linear coefficient: the constraint above reads
``x1^2 + x2^2 - 2 x1 + 0 < 0``.  Internally the system stores half of it.
``A`` may be given in full or as its upper triangle (row ``i`` holding the
entries ``A[i, i:]``); a full matrix that is not symmetric is rejected.
"""
from __future__ import annotations

import dataclasses
import hashlib
import json
from pathlib import Path

import numpy as np

from .qform import QuadraticFunction, QuadraticSystem


class SystemFileError(ValueError):
    """Malformed system file; the message names the offending field."""


def _number(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise SystemFileError(f"{where}: expected a number, got {json.dumps(v)}")
    if not np.isfinite(v):
        raise SystemFileError(f"{where}: value must be finite")
    return float(v)


def _matrix(rows, n: int, where: str) -> np.ndarray:
    if not isinstance(rows, list) or len(rows) != n:
        raise SystemFileError(f"{where}: expected a list of {n} rows")
    lengths = [len(r) if isinstance(r, list) else -1 for r in rows]
    A = np.zeros((n, n))
    if all(L == n for L in lengths):
        for i, r in enumerate(rows):
            for j, v in enumerate(r):
                A[i, j] = _number(v, f"{where}[{i}][{j}]")
        bad = np.argwhere(np.abs(A - A.T) > 1e-12 * max(1.0, np.max(np.abs(A))))
        if len(bad):
            i, j = bad[0]
            raise SystemFileError(f"{where}: matrix is not symmetric at [{i}][{j}] "
                                  f"({A[i, j]} vs {A[j, i]})")
        return A
    for i, (r, L) in enumerate(zip(rows, lengths)):
        if L != n - i:
            raise SystemFileError(f"{where}[{i}]: row has {L if L >= 0 else 'no'} entries; expected "
                                  f"{n} (full matrix) or {n - i} (upper triangle)")
        for k, v in enumerate(r):
            A[i, i + k] = A[i + k, i] = _number(v, f"{where}[{i}][{k}]")
    return A


def system_from_dict(doc) -> QuadraticSystem:
    if not isinstance(doc, dict):
        raise SystemFileError("top level: expected an object")
    if "n" not in doc:
        raise SystemFileError("n: missing")
    n = doc["n"]
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise SystemFileError(f"n: expected a positive integer, got {json.dumps(n)}")
    cons = doc.get("constraints")
    if not isinstance(cons, list) or not cons:
        raise SystemFileError("constraints: expected a nonempty list")
    funcs, names = [], []
    for k, c in enumerate(cons):
        where = f"constraints[{k}]"
        if not isinstance(c, dict):
            raise SystemFileError(f"{where}: expected an object")
        unknown = set(c) - {"name", "A", "linear", "c", "strict"}
        if unknown:
            raise SystemFileError(f"{where}: unknown field(s) {sorted(unknown)}")
        if "A" not in c:
            raise SystemFileError(f"{where}.A: missing")
        A = _matrix(c["A"], n, f"{where}.A")
        lin = c.get("linear", [0.0] * n)
        if not isinstance(lin, list) or len(lin) != n:
            raise SystemFileError(f"{where}.linear: expected a list of {n} numbers")
        lin = [_number(v, f"{where}.linear[{i}]") for i, v in enumerate(lin)]
        const = _number(c.get("c", 0.0), f"{where}.c")
        strict = c.get("strict", True)
        if not isinstance(strict, bool):
            raise SystemFileError(f"{where}.strict: expected true or false")
        funcs.append(QuadraticFunction.from_linear(A, lin, const, strict))
        names.append(str(c.get("name", f"f{k + 1}")))
    return QuadraticSystem(tuple(funcs), tuple(names))


def system_to_dict(sys: QuadraticSystem) -> dict:
    # adding 0.0 turns -0.0 into 0.0 so digests do not depend on signed zeros
    return {
        "n": sys.n,
        "constraints": [
            {"name": name, "A": (f.A + 0.0).tolist(), "linear": (2.0 * f.b + 0.0).tolist(),
             "c": f.c + 0.0, "strict": f.strict}
            for name, f in zip(sys.labels, sys)
        ],
    }


def parse_system(text: str) -> QuadraticSystem:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise SystemFileError(f"line {e.lineno}, column {e.colno}: {e.msg}") from None
    return system_from_dict(doc)


def load_system(path) -> QuadraticSystem:
    p = Path(path)
    try:
        text = p.read_text()
    except OSError as e:
        raise SystemFileError(f"{p}: {e.strerror}") from None
    try:
        return parse_system(text)
    except SystemFileError as e:
        raise SystemFileError(f"{p}: {e}") from None


def _num(v: float) -> str:
    return json.dumps(int(v)) if float(v).is_integer() and abs(v) < 1e15 else json.dumps(v)


def dump_system(sys: QuadraticSystem, path=None) -> str:
    """Human-readable JSON: one constraint field per line, one matrix row per line."""
    doc = system_to_dict(sys)
    vec = lambda v: "[" + ", ".join(_num(t) for t in v) + "]"
    blocks = []
    for c in doc["constraints"]:
        rows = (",\n" + " " * 12).join(vec(r) for r in c["A"])
        blocks.append("    {\n"
                      f'      "name": {json.dumps(c["name"])},\n'
                      f'      "A": [{rows}],\n'
                      f'      "linear": {vec(c["linear"])},\n'
                      f'      "c": {_num(c["c"])},\n'
                      f'      "strict": {json.dumps(c["strict"])}\n'
                      "    }")
    text = '{\n  "n": %d,\n  "constraints": [\n%s\n  ]\n}' % (doc["n"], ",\n".join(blocks))
    if path is not None:
        Path(path).write_text(text + "\n")
    return text


def system_digest(sys: QuadraticSystem) -> str:
    canon = json.dumps(system_to_dict(sys), sort_keys=True, separators=(",", ":"))
    return "sha256:" + hashlib.sha256(canon.encode()).hexdigest()


def to_jsonable(obj):
    """Recursively convert numpy arrays, dataclasses and tuples into JSON types."""
    if isinstance(obj, QuadraticFunction):
        return {"A": obj.A.tolist(), "linear": (2.0 * obj.b).tolist(), "c": obj.c,
                "strict": obj.strict}
    if dataclasses.is_dataclass(obj) and not isinstance(obj, type):
        return {f.name: to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)
                if not isinstance(getattr(obj, f.name), QuadraticSystem)}
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if np.isfinite(v) else None
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, dict):
        return {str(k) if not isinstance(k, tuple) else ",".join(map(str, k)): to_jsonable(v)
                for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    return obj
