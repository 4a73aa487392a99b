"""Quadratic constraints, their homogenizations and nonnegative aggregations.

A constraint is ``f(x) = x^T A x + 2 b^T x + c`` compared against zero, either
strictly (``f < 0``) or not (``f <= 0``).  Its homogenization is the form
``(x, t)^T Q (x, t)`` with ``Q = [[A, b], [b^T, c]]``.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np

#: absolute tolerance for classifying user-supplied coefficient matrices
TAU_A = 1e-9
#: relative tolerance for the rank test on hyperplane bases
TAU_RANK = 1e-10
#: relative asymmetry that is silently repaired; larger deviations warn
ASYMMETRY_WARN = 1e-6


class AsymmetryWarning(UserWarning):
    """Raised through :mod:`warnings` when an input matrix is visibly asymmetric."""


def _symmetrize(A: np.ndarray, what: str = "A") -> np.ndarray:
    A = np.array(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"{what} must be a square matrix, got shape {A.shape}")
    dev = np.max(np.abs(A - A.T)) if A.size else 0.0
    if dev > ASYMMETRY_WARN * max(1.0, np.max(np.abs(A))):
        warnings.warn(f"{what} is asymmetric (max deviation {dev:.3g}); "
                      "using (A + A^T)/2", AsymmetryWarning, stacklevel=3)
    S = 0.5 * (A + A.T)
    S.setflags(write=False)
    return S


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class QuadraticFunction:
    """``f(x) = x^T A x + 2 b^T x + c``.

    ``b`` is half of the linear coefficient, so that the homogenized matrix
    can be assembled as ``[[A, b], [b^T, c]]`` without rescaling.
    """

    A: np.ndarray
    b: np.ndarray
    c: float
    strict: bool = True

    def __post_init__(self):
        A = _symmetrize(self.A)
        b = _frozen(np.ravel(self.b))
        if b.shape[0] != A.shape[0]:
            raise ValueError(f"b has length {b.shape[0]}, expected {A.shape[0]}")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", float(self.c))
        object.__setattr__(self, "strict", bool(self.strict))

    @classmethod
    def from_linear(cls, A, linear, c, strict=True) -> "QuadraticFunction":
        """Build from the full linear coefficient (``x^T A x + linear^T x + c``)."""
        return cls(A, 0.5 * np.asarray(linear, dtype=float), c, strict)

    @classmethod
    def from_matrix(cls, Q, strict=True) -> "QuadraticFunction":
        Q = _symmetrize(Q, "Q")
        return cls(Q[:-1, :-1], Q[:-1, -1], Q[-1, -1], strict)

    @classmethod
    def zero(cls, n: int, strict=True) -> "QuadraticFunction":
        return cls(np.zeros((n, n)), np.zeros(n), 0.0, strict)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def Q(self) -> np.ndarray:
        return homogenize(self)

    def __call__(self, x) -> np.ndarray:
        return evaluate(self, x)

    def __add__(self, other: "QuadraticFunction") -> "QuadraticFunction":
        return QuadraticFunction(self.A + other.A, self.b + other.b,
                                 self.c + other.c, self.strict and other.strict)

    def __mul__(self, t: float) -> "QuadraticFunction":
        return QuadraticFunction(t * self.A, t * self.b, t * self.c, self.strict)

    __rmul__ = __mul__

    def allclose(self, other: "QuadraticFunction", atol=1e-12) -> bool:
        return (np.allclose(self.A, other.A, atol=atol)
                and np.allclose(self.b, other.b, atol=atol)
                and abs(self.c - other.c) <= atol)

    def __repr__(self):
        return (f"QuadraticFunction(n={self.n}, A={self.A.tolist()}, "
                f"b={self.b.tolist()}, c={self.c}, strict={self.strict})")


def homogenize(f: QuadraticFunction) -> np.ndarray:
    """Return the ``(n+1) x (n+1)`` matrix ``[[A, b], [b^T, c]]``."""
    n = f.n
    Q = np.empty((n + 1, n + 1))
    Q[:n, :n] = f.A
    Q[:n, n] = f.b
    Q[n, :n] = f.b
    Q[n, n] = f.c
    return Q


def evaluate(f: QuadraticFunction, x) -> np.ndarray:
    """Evaluate ``f`` at a point or at each row of a 2-D array of points."""
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != f.n:
        raise ValueError(f"point has dimension {x.shape[-1]}, expected {f.n}")
    quad = np.einsum("...i,ij,...j->...", x, f.A, x)
    return quad + 2.0 * (x @ f.b) + f.c


@dataclass(frozen=True, eq=False)
class QuadraticSystem:
    """An ordered family of ``m`` constraints on ``R^n``.

    With every constraint strict the system describes ``S``; with every
    constraint closed it describes ``T``.  Mixed systems are representable,
    but operations that need one kind check :attr:`all_strict` /
    :attr:`all_closed` themselves.
    """

    constraints: tuple
    labels: Optional[tuple] = None

    def __post_init__(self):
        cons = tuple(self.constraints)
        if not cons:
            raise ValueError("a system needs at least one constraint")
        n = cons[0].n
        if n < 1:
            raise ValueError("dimension must be at least 1")
        for k, f in enumerate(cons):
            if f.n != n:
                raise ValueError(f"constraint {k} has dimension {f.n}, expected {n}")
        object.__setattr__(self, "constraints", cons)
        if self.labels is None:
            labels = tuple(f"f{k + 1}" for k in range(len(cons)))
        else:
            labels = tuple(self.labels)
            if len(labels) != len(cons):
                raise ValueError("one label per constraint is required")
        object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.constraints[0].n

    @property
    def m(self) -> int:
        return len(self.constraints)

    @property
    def all_strict(self) -> bool:
        return all(f.strict for f in self.constraints)

    @property
    def all_closed(self) -> bool:
        return not any(f.strict for f in self.constraints)

    @cached_property
    def Qs(self) -> np.ndarray:
        """Stacked homogenized matrices, shape ``(m, n+1, n+1)``."""
        return _frozen(np.stack([homogenize(f) for f in self.constraints]))

    @cached_property
    def As(self) -> np.ndarray:
        return _frozen(np.stack([f.A for f in self.constraints]))

    @cached_property
    def bs(self) -> np.ndarray:
        return _frozen(np.stack([f.b for f in self.constraints]))

    @cached_property
    def cs(self) -> np.ndarray:
        return _frozen([f.c for f in self.constraints])

    @cached_property
    def scale(self) -> float:
        """Coefficient magnitude used to turn relative tolerances into absolute ones."""
        return max(1.0, float(np.max(np.abs(self.Qs))))

    def values(self, X) -> np.ndarray:
        """Constraint values, shape ``(..., m)``."""
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.n:
            raise ValueError(f"point has dimension {X.shape[-1]}, expected {self.n}")
        quad = np.einsum("...i,kij,...j->...k", X, self.As, X)
        return quad + 2.0 * (X @ self.bs.T) + self.cs

    def contains(self, X, margin: float = 0.0) -> np.ndarray:
        """Membership of points in ``{x : f_i(x) < -margin}`` (or ``<=`` for closed rows)."""
        V = self.values(X)
        strict = np.array([f.strict for f in self.constraints])
        ok = np.where(strict, V < -margin, V <= -margin)
        return np.all(ok, axis=-1)

    def with_strictness(self, strict: bool) -> "QuadraticSystem":
        return QuadraticSystem(tuple(QuadraticFunction(f.A, f.b, f.c, strict)
                                     for f in self.constraints), self.labels)

    def subsystem(self, idx: Sequence[int]) -> "QuadraticSystem":
        return QuadraticSystem(tuple(self.constraints[i] for i in idx),
                               tuple(self.labels[i] for i in idx))

    def __iter__(self):
        return iter(self.constraints)

    def __len__(self):
        return self.m

    def __getitem__(self, i) -> QuadraticFunction:
        return self.constraints[i]


def check_weights(lam, m: int) -> np.ndarray:
    lam = np.asarray(lam, dtype=float).ravel()
    if lam.shape[0] != m:
        raise ValueError(f"expected {m} weights, got {lam.shape[0]}")
    if np.any(lam < 0):
        raise ValueError(f"aggregation weights must be nonnegative, got {lam.tolist()}")
    return lam


def aggregate(sys: QuadraticSystem, lam) -> QuadraticFunction:
    """Return ``F_lambda = sum_i lambda_i f_i`` for ``lambda >= 0``."""
    lam = check_weights(lam, sys.m)
    return combine(sys, lam)


def combine(sys: QuadraticSystem, theta) -> QuadraticFunction:
    """Arbitrary real linear combination of the constraints (signs unrestricted)."""
    theta = np.asarray(theta, dtype=float).ravel()
    if theta.shape[0] != sys.m:
        raise ValueError(f"expected {sys.m} coefficients, got {theta.shape[0]}")
    A = np.tensordot(theta, sys.As, axes=1)
    b = np.tensordot(theta, np.stack([f.b for f in sys]), axes=1)
    c = float(theta @ np.array([f.c for f in sys]))
    strict = all(f.strict for f, t in zip(sys, theta) if t != 0) if np.any(theta) else True
    return QuadraticFunction(A, b, c, strict)


def aggregated_matrix(sys: QuadraticSystem, theta) -> np.ndarray:
    """``Q_theta = sum_i theta_i Q_i``."""
    return np.tensordot(np.asarray(theta, dtype=float), sys.Qs, axes=1)


@dataclass(frozen=True)
class SphereStructure:
    """Index sets of constraints whose quadratic part is ``I`` (P), ``0`` (Z) or ``-I`` (N)."""

    P: tuple = field(default_factory=tuple)
    Z: tuple = field(default_factory=tuple)
    N: tuple = field(default_factory=tuple)


def detect_sphere_structure(sys: QuadraticSystem, tol: float = TAU_A) -> Optional[SphereStructure]:
    """Classify each ``A_i`` as ``I``, ``0`` or ``-I``; ``None`` if some matches none."""
    I = np.eye(sys.n)
    P, Z, N = [], [], []
    for i, f in enumerate(sys):
        if np.max(np.abs(f.A - I)) <= tol:
            P.append(i)
        elif np.max(np.abs(f.A)) <= tol:
            Z.append(i)
        elif np.max(np.abs(f.A + I)) <= tol:
            N.append(i)
        else:
            return None
    return SphereStructure(tuple(P), tuple(Z), tuple(N))


def detect_diagonal(sys: QuadraticSystem, tol: float = TAU_A) -> bool:
    """True when every homogenized matrix is diagonal (so every ``b_i = 0``)."""
    for Q in sys.Qs:
        off = Q - np.diag(np.diag(Q))
        if np.max(np.abs(off)) > tol:
            return False
    return True


def restrict_to_hyperplane(Q, W) -> np.ndarray:
    """Return ``W^T Q W`` for a full-column-rank basis ``W`` of a hyperplane."""
    Q = np.asarray(Q, dtype=float)
    W = np.asarray(W, dtype=float)
    k = Q.shape[0]
    if W.shape != (k, k - 1):
        raise ValueError(f"basis must have shape {(k, k - 1)}, got {W.shape}")
    sv = np.linalg.svd(W, compute_uv=False)
    if k > 1 and sv[-1] <= TAU_RANK * max(1.0, sv[0]):
        raise np.linalg.LinAlgError("hyperplane basis is rank deficient")
    R = W.T @ Q @ W
    return 0.5 * (R + R.T)


def hyperplane_basis(normal) -> np.ndarray:
    """Orthonormal basis (columns) of the hyperplane ``{x : normal^T x = 0}``."""
    a = np.asarray(normal, dtype=float).ravel()
    if not np.any(a):
        raise ValueError("hyperplane normal must be nonzero")
    # last k-1 left singular vectors span the orthogonal complement of a
    U, _, _ = np.linalg.svd(a[:, None], full_matrices=True)
    return U[:, 1:]


def change_basis(Q, P) -> np.ndarray:
    """Return ``P^T Q P`` for invertible ``P``."""
    Q = np.asarray(Q, dtype=float)
    P = np.asarray(P, dtype=float)
    if P.shape[0] != P.shape[1] or abs(np.linalg.det(P)) <= TAU_RANK:
        raise np.linalg.LinAlgError("basis change matrix is singular")
    R = P.T @ Q @ P
    return 0.5 * (R + R.T)


class PreconditionError(ValueError):
    """An operation's mathematical precondition does not hold for the input."""
