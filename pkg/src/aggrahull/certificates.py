"""Aggregation certificates: emptiness of S, whether conv(S) is all of R^n,
positive definite linear combinations, and escape bounds along recession
directions.

Every certificate here is sound on its own.  The converse directions hold
only under hidden convexity, which cannot be checked numerically, so a
missing certificate is never treated as a proof.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations
from typing import Optional

import numpy as np

from ._parallel import child_seeds, thread_map
from .linalg import TAU_ZERO, max_min_eig, min_eig
from .qform import QuadraticSystem, aggregate, evaluate

COMPLETENESS_NOTE = "complete under hidden convexity hypothesis"


def _matrices(sys_or_Qs) -> np.ndarray:
    if isinstance(sys_or_Qs, QuadraticSystem):
        return sys_or_Qs.Qs
    return np.asarray(sys_or_Qs, dtype=float)


@dataclass
class EmptinessCertificate:
    """Weights with ``Q_lambda`` positive semidefinite, hence ``S`` empty."""

    lam: np.ndarray
    margin: float
    note: str = COMPLETENESS_NOTE


@dataclass
class PdlcWitness:
    theta: np.ndarray
    min_eig: float


@dataclass
class TripleWitnessTable:
    witnesses: dict = field(default_factory=dict)
    failed: list = field(default_factory=list)

    def get(self, triple) -> Optional[PdlcWitness]:
        return self.witnesses.get(tuple(sorted(triple)))

    def __contains__(self, triple) -> bool:
        return tuple(sorted(triple)) in self.witnesses

    def __len__(self):
        return len(self.witnesses)


@dataclass
class RecessionWitness:
    """Unit vector ``v`` with ``v^T A_i v < 0`` for every constraint."""

    v: np.ndarray
    value: float


@dataclass
class RecessionResult:
    """Outcome of the recession-direction search.

    ``witness`` certifies ``conv(S) = R^n`` (for nonempty ``S``).  When no
    witness is found, ``psd_lam`` (if present) gives weights with
    ``sum lam_i A_i`` positive semidefinite, which rules a witness out.
    """

    witness: Optional[RecessionWitness]
    psd_lam: Optional[np.ndarray]
    psd_margin: float

    def __bool__(self):
        return self.witness is not None


def emptiness_certificate(sys: QuadraticSystem, tau_zero: float = TAU_ZERO,
                          seed: int = 0, **opt) -> Optional[EmptinessCertificate]:
    """Search the simplex for ``lambda`` with ``Q_lambda`` positive semidefinite."""
    if not sys.all_strict:
        raise ValueError("emptiness certificate needs an all-strict system")
    res = max_min_eig(sys.Qs, "simplex", seed=seed, **opt)
    if res.value < -tau_zero * sys.scale:
        return None
    lam = np.maximum(res.argument, 0.0)
    lam = lam / lam.sum()
    return EmptinessCertificate(lam, min_eig(np.tensordot(lam, sys.Qs, axes=1)))


def pdlc_witness(sys_or_Qs, tau_zero: float = TAU_ZERO, seed: int = 0,
                 **opt) -> Optional[PdlcWitness]:
    """Search the unit ball for ``theta`` with ``sum theta_i Q_i`` positive definite."""
    Qs = _matrices(sys_or_Qs)
    res = max_min_eig(Qs, "ball", seed=seed, **opt)
    if res.value <= tau_zero:
        return None
    theta = res.argument / np.linalg.norm(res.argument)
    return PdlcWitness(theta, min_eig(np.tensordot(theta, Qs, axes=1)))


def triple_pdlc_table(sys_or_Qs, seed: int = 0, **opt) -> TripleWitnessTable:
    """PDLC witness for every triple of distinct constraints."""
    Qs = _matrices(sys_or_Qs)
    m = len(Qs)
    if m < 3:
        raise ValueError("triple table needs at least three constraints")
    triples = list(combinations(range(m), 3))
    seeds = child_seeds(seed, len(triples))
    found = thread_map(lambda ts: pdlc_witness(Qs[list(ts[0])], seed=ts[1], **opt),
                       zip(triples, seeds))
    table = TripleWitnessTable()
    for t, w in zip(triples, found):
        if w is None:
            table.failed.append(t)
        else:
            table.witnesses[t] = w
    return table


def recession_direction(sys: QuadraticSystem, restarts: int = 100, iters: int = 400,
                        seed: int = 0, tau_zero: float = TAU_ZERO) -> RecessionResult:
    """Look for ``v`` with ``max_i v^T A_i v < 0`` on the unit sphere.

    Batched projected subgradient descent from quasi-random starts.  The
    complementary certificate (nonnegative ``lambda`` with
    ``sum lam_i A_i`` positive semidefinite) is searched as well.
    """
    from scipy.stats import norm, qmc

    As = sys.As
    n = sys.n
    scale = max(1.0, float(np.max(np.abs(As))))
    if n == 1:
        V = np.array([[1.0]])
    else:
        u = qmc.Halton(d=n, scramble=True, seed=seed).random(restarts)
        V = norm.ppf(np.clip(u, 1e-12, 1 - 1e-12))
        V /= np.linalg.norm(V, axis=1, keepdims=True)
    best_v, best_val = V[0].copy(), np.inf
    for t in range(1, iters + 1):
        vals = np.einsum("rj,ijk,rk->ri", V, As, V)
        top = np.argmax(vals, axis=1)
        cur = vals[np.arange(len(V)), top]
        r = int(np.argmin(cur))
        if cur[r] < best_val:
            best_val, best_v = float(cur[r]), V[r].copy()
        G = 2.0 * np.einsum("rjk,rk->rj", As[top], V)
        G -= np.sum(G * V, axis=1, keepdims=True) * V
        V = V - (0.5 / np.sqrt(t)) * G / max(scale, 1e-300)
        V /= np.linalg.norm(V, axis=1, keepdims=True)
    witness = None
    if best_val < -tau_zero * scale:
        witness = RecessionWitness(best_v, best_val)
    res = max_min_eig(As, "simplex", seed=seed, iters=2000, restarts=10)
    psd_lam = None
    if res.value >= -tau_zero * scale:
        psd_lam = res.argument / res.argument.sum()
    return RecessionResult(witness, psd_lam, float(res.value))


class EscapeBoundError(ArithmeticError):
    pass


def escape_bound(sys: QuadraticSystem, x, v) -> float:
    """Step ``M`` such that ``x + M v`` and ``x - M v`` both lie in ``S``.

    Each ``f_i(x + t v)`` is a concave quadratic in ``t``; ``M`` exceeds the
    largest root magnitude over the constraints whose discriminant is
    nonnegative (the others are negative for every ``t``).
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(getattr(v, "v", v), dtype=float)
    worst = 0.0
    for f in sys:
        gamma = float(v @ f.A @ v)
        if gamma >= 0:
            raise ValueError("v is not a recession direction: v^T A_i v >= 0 for some i")
        beta = float(x @ f.A @ v + f.b @ v)
        disc = beta * beta - gamma * float(evaluate(f, x))
        if disc >= 0:
            worst = max(worst, (abs(beta) + np.sqrt(disc)) / (-gamma))
    M = worst + 1.0
    for s in (1.0, -1.0):
        vals = sys.values(x + s * M * v)
        if np.any(vals >= 0):
            raise EscapeBoundError(f"escape bound {M:.6g} fails the evaluation check: {vals}")
    return M


@dataclass
class RnStatus:
    """Whether ``conv(S)`` is all of ``R^n``.

    ``value`` is True (certified by a recession direction), False (certified
    by a convex aggregation that is not a negative constant) or None.
    """

    value: Optional[bool]
    reason: str
    recession: RecessionResult
    lam: Optional[np.ndarray] = None


def hull_is_rn(sys: QuadraticSystem, seed: int = 0, tau_zero: float = TAU_ZERO) -> RnStatus:
    rec = recession_direction(sys, seed=seed)
    if rec.witness is not None:
        return RnStatus(True, "recession direction found", rec)
    if rec.psd_lam is not None:
        F = aggregate(sys, np.maximum(rec.psd_lam, 0.0))
        tol = tau_zero * sys.scale
        if np.max(np.abs(F.A)) <= tol and np.max(np.abs(F.b)) <= tol and F.c < 0:
            return RnStatus(None, "undetermined by aggregation certificates: the convex "
                            "aggregation is a negative constant", rec, rec.psd_lam)
        return RnStatus(False, "convex aggregation bounds conv(S)", rec, rec.psd_lam)
    return RnStatus(None, "no certificate either way", rec)
