"""Box-constrained convex quadratic programs and their optimality measures.

A problem is the quintuple (P, q, A, l, u) for

    minimize    0.5 * x' P x + q' x
    subject to  l <= A x <= u

with P symmetric positive semidefinite. Bounds may be one-sided
(``-inf`` lower, ``+inf`` upper); an equality row is encoded by
``l[i] == u[i]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PSD_TOL = 1e-10


class ValidationError(ValueError):
    """Problem data violates a structural requirement.

    ``index`` identifies the offending component when one exists.
    """

    def __init__(self, message: str, index: int | None = None):
        super().__init__(message)
        self.index = index


@dataclass(frozen=True)
class QpProblem:
    """Immutable problem data. Run :func:`validate` before solving."""

    P: np.ndarray
    q: np.ndarray
    A: np.ndarray
    l: np.ndarray
    u: np.ndarray
    name: str = ""

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def objective(self, x: np.ndarray) -> float:
        return 0.5 * float(x @ self.P @ x) + float(self.q @ x)


@dataclass(frozen=True)
class Iterate:
    """Solver state after ``k`` completed outer iterations."""

    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    k: int = 0


@dataclass(frozen=True)
class Residuals:
    r_prim: np.ndarray
    r_dual: np.ndarray
    prim_norm_inf: float
    dual_norm_inf: float
    prim_norm_2: float
    dual_norm_2: float


@dataclass(frozen=True)
class KktReport:
    """Optimality certificate sizes for a candidate primal/dual pair."""

    stationarity_norm: float
    feasibility_norm: float
    complementarity_norm: float
    passed: bool


def _as_float_array(value, field: str, ndim: int) -> np.ndarray:
    arr = np.asarray(value, dtype=float)
    if arr.ndim != ndim:
        raise ValidationError(f"{field} must be {ndim}-dimensional, got shape {arr.shape}")
    return arr


def validate(problem: QpProblem) -> QpProblem:
    """Check all structural invariants and return a cleaned problem.

    P is symmetrized on load; the returned arrays are float64 and
    read-only. Raises :class:`ValidationError` on dimension mismatch,
    inverted bounds, or an indefinite P, naming the offending index.
    """
    P = _as_float_array(problem.P, "P", 2)
    q = _as_float_array(problem.q, "q", 1)
    A = _as_float_array(problem.A, "A", 2)
    l = _as_float_array(problem.l, "l", 1)
    u = _as_float_array(problem.u, "u", 1)

    n = P.shape[0]
    if P.shape != (n, n) or n < 1:
        raise ValidationError(f"P must be square with n >= 1, got shape {P.shape}")
    m = A.shape[0]
    if m < 1:
        raise ValidationError("m must be >= 1")
    if A.shape[1] != n:
        raise ValidationError(f"A has {A.shape[1]} columns, expected n={n}")
    if q.shape != (n,):
        raise ValidationError(f"q has length {q.shape[0]}, expected n={n}")
    if l.shape != (m,):
        raise ValidationError(f"l has length {l.shape[0]}, expected m={m}")
    if u.shape != (m,):
        raise ValidationError(f"u has length {u.shape[0]}, expected m={m}")

    if not np.all(np.isfinite(P)):
        raise ValidationError("P contains non-finite entries")
    if not np.all(np.isfinite(q)):
        raise ValidationError("q contains non-finite entries")
    if not np.all(np.isfinite(A)):
        raise ValidationError("A contains non-finite entries")

    for i in range(m):
        if np.isnan(l[i]) or l[i] == np.inf:
            raise ValidationError(f"l[{i}] must be finite or -inf", index=i)
        if np.isnan(u[i]) or u[i] == -np.inf:
            raise ValidationError(f"u[{i}] must be finite or +inf", index=i)
        if l[i] > u[i]:
            raise ValidationError(f"inverted bounds at index {i}: l={l[i]} > u={u[i]}", index=i)

    P = 0.5 * (P + P.T)

    # Positive semidefiniteness, tolerating round-off relative to the
    # spectral radius.
    from .linalg import symmetric_eig

    pairs = symmetric_eig(P)
    min_eig = pairs[0].value
    radius = max(abs(pairs[0].value), abs(pairs[-1].value))
    if min_eig < -PSD_TOL * (1.0 + radius):
        raise ValidationError(
            f"P is not positive semidefinite: min eigenvalue {min_eig:.3e}", index=0
        )

    for arr in (P, q, A, l, u):
        arr.flags.writeable = False
    return QpProblem(P=P, q=q, A=A, l=l, u=u, name=problem.name)


def project_box(v: np.ndarray, l: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Componentwise Euclidean projection onto the box [l, u]."""
    return np.minimum(np.maximum(v, l), u)


def residuals(problem: QpProblem, iterate: Iterate) -> Residuals:
    """Primal residual A x - z and dual residual P x + q + A' y, with norms."""
    r_prim = problem.A @ iterate.x - iterate.z
    r_dual = problem.P @ iterate.x + problem.q + problem.A.T @ iterate.y
    return Residuals(
        r_prim=r_prim,
        r_dual=r_dual,
        prim_norm_inf=float(np.max(np.abs(r_prim))),
        dual_norm_inf=float(np.max(np.abs(r_dual))),
        prim_norm_2=float(np.linalg.norm(r_prim)),
        dual_norm_2=float(np.linalg.norm(r_dual)),
    )
