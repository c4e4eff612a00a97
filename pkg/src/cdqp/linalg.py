"""Self-contained dense symmetric kernels with deterministic flop accounting.

Cholesky factorization, a cyclic-Jacobi eigensolver, reduction of the
symmetric-definite pencil (S, B), and two iterative solvers for SPD
systems: conjugate gradients, and direct recombination along a cached
set of conjugate directions. Dense row-major float64 throughout; sized
for desk-scale problems (n up to a few dozen).

Flop accounting is a hardware-independent cost model: multiply-add
pairs in matvecs, dot products, and axpys count 2 flops each; O(n)
scalar work is ignored. One operator application is booked at
``2*n*n + 2*n*m``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

JACOBI_MAX_SWEEPS = 100
JACOBI_OFF_TOL = 1e-12
JACOBI_POLISH_REL_TOL = 1e-12
JACOBI_POLISH_SWEEPS = 30
CHOLESKY_PIVOT_TOL = 1e-14
EIG_CLUSTER_TOL = 1e-10

_EPS = float(np.finfo(float).eps)


class NotPositiveDefiniteError(ValueError):
    """Cholesky pivot at ``index`` fell below the positivity floor."""

    def __init__(self, index: int, pivot: float):
        super().__init__(f"matrix is not positive definite: pivot {pivot:.3e} at index {index}")
        self.index = index
        self.pivot = pivot


class EigenConvergenceError(RuntimeError):
    """Jacobi sweeps exhausted without reaching the off-diagonal threshold."""


class CgBreakdownError(RuntimeError):
    """Conjugate-gradient curvature p'Mp <= 0: the operator is not SPD."""


class StaleDirectionsError(RuntimeError):
    """Cached directions are inconsistent with the current operator."""


@dataclass(eq=False)
class SpdOperator:
    """Implicit operator v -> (P + sigma*I + scale * A' diag(rho_base) A) v.

    The matrix is never assembled unless :meth:`matrix` is called.
    ``flops`` grows by ``2*n*n + 2*n*m`` per application; callers own one
    operator instance per solve, so the counter is call-local.
    """

    P: np.ndarray
    A: np.ndarray
    sigma: float
    rho_base: np.ndarray
    scale: float = 1.0
    flops: int = field(default=0, compare=False)

    @property
    def n(self) -> int:
        return self.P.shape[0]

    @property
    def m(self) -> int:
        return self.A.shape[0]

    def apply(self, v: np.ndarray) -> np.ndarray:
        self.flops += 2 * self.n * self.n + 2 * self.n * self.m
        av = self.A @ v
        return self.P @ v + self.sigma * v + self.scale * (self.A.T @ (self.rho_base * av))

    def matrix(self) -> np.ndarray:
        """Assemble the operator densely (tests and small direct checks)."""
        return (
            self.P
            + self.sigma * np.eye(self.n)
            + self.scale * (self.A.T @ (self.rho_base[:, None] * self.A))
        )


@dataclass(frozen=True)
class CgTrace:
    """Cost record of one inner solve.

    ``final_relative_residual`` is the true residual of the returned
    iterate, ``norm(M x - b) / max(norm(b), eps_machine)``.
    """

    iterations: int
    final_relative_residual: float
    flops: int


@dataclass(frozen=True)
class EigenPair:
    value: float
    vector: np.ndarray


def cholesky(B: np.ndarray) -> np.ndarray:
    """Lower-triangular L with B = L L'.

    Pivots are required to exceed ``1e-14 * trace(B) / n``; the first
    failing pivot raises :class:`NotPositiveDefiniteError` with its index.
    """
    B = np.asarray(B, dtype=float)
    n = B.shape[0]
    L = np.zeros((n, n))
    floor = CHOLESKY_PIVOT_TOL * np.trace(B) / n
    for j in range(n):
        pivot = B[j, j] - L[j, :j] @ L[j, :j]
        if pivot <= floor:
            raise NotPositiveDefiniteError(j, float(pivot))
        L[j, j] = math.sqrt(pivot)
        if j + 1 < n:
            L[j + 1 :, j] = (B[j + 1 :, j] - L[j + 1 :, :j] @ L[j, :j]) / L[j, j]
    return L


def solve_lower(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Forward substitution for L x = b (b may have multiple columns)."""
    n = L.shape[0]
    x = np.zeros_like(np.asarray(b, dtype=float))
    for i in range(n):
        x[i] = (b[i] - L[i, :i] @ x[:i]) / L[i, i]
    return x


def solve_lower_transpose(L: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Back substitution for L' x = b (b may have multiple columns)."""
    n = L.shape[0]
    x = np.zeros_like(np.asarray(b, dtype=float))
    for i in range(n - 1, -1, -1):
        x[i] = (b[i] - L[i + 1 :, i] @ x[i + 1 :]) / L[i, i]
    return x


def _pin_sign(v: np.ndarray) -> np.ndarray:
    # Deterministic orientation: the largest-magnitude entry is positive.
    k = int(np.argmax(np.abs(v)))
    return -v if v[k] < 0 else v


def _rotate(a: np.ndarray, V: np.ndarray, p: int, q: int) -> None:
    apq = a[p, q]
    phi = (a[q, q] - a[p, p]) / (2.0 * apq)
    if phi == 0.0:
        t = 1.0
    else:
        t = math.copysign(1.0, phi) / (abs(phi) + math.sqrt(phi * phi + 1.0))
    c = 1.0 / math.sqrt(t * t + 1.0)
    s = t * c
    col_p = a[:, p].copy()
    col_q = a[:, q].copy()
    a[:, p] = c * col_p - s * col_q
    a[:, q] = s * col_p + c * col_q
    row_p = a[p, :].copy()
    row_q = a[q, :].copy()
    a[p, :] = c * row_p - s * row_q
    a[q, :] = s * row_p + c * row_q
    v_p = V[:, p].copy()
    v_q = V[:, q].copy()
    V[:, p] = c * v_p - s * v_q
    V[:, q] = s * v_p + c * v_q


def _polish_measure(a: np.ndarray) -> float:
    # Largest off-diagonal relative to its diagonal pair (positive diagonals only).
    n = a.shape[0]
    worst = 0.0
    for p in range(n - 1):
        for q in range(p + 1, n):
            if a[p, p] > 0.0 and a[q, q] > 0.0:
                worst = max(worst, abs(a[p, q]) / math.sqrt(a[p, p] * a[q, q]))
    return worst


def _jacobi(S: np.ndarray, relative_polish: bool = False) -> tuple[np.ndarray, np.ndarray]:
    a = np.array(S, dtype=float, copy=True)
    n = a.shape[0]
    V = np.eye(n)
    if n == 1:
        return np.diag(a).copy(), V
    fro = float(np.linalg.norm(S, "fro"))
    off_tol = JACOBI_OFF_TOL * fro
    iu = np.triu_indices(n, k=1)
    for _ in range(JACOBI_MAX_SWEEPS):
        if float(np.max(np.abs(a[iu]))) <= off_tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if a[p, q] != 0.0:
                    _rotate(a, V, p, q)
    else:
        raise EigenConvergenceError(
            f"Jacobi did not converge in {JACOBI_MAX_SWEEPS} sweeps (n={n})"
        )

    if relative_polish:
        # For positive definite input, push off-diagonals down relative to
        # their diagonal pair so widely spread spectra still yield pairwise
        # conjugacy. Best effort: stops on stagnation, never raises.
        previous = math.inf
        for _ in range(JACOBI_POLISH_SWEEPS):
            measure = _polish_measure(a)
            if measure <= JACOBI_POLISH_REL_TOL or measure >= previous:
                break
            previous = measure
            for p in range(n - 1):
                for q in range(p + 1, n):
                    if (
                        a[p, p] > 0.0
                        and a[q, q] > 0.0
                        and abs(a[p, q]) > JACOBI_POLISH_REL_TOL * math.sqrt(a[p, p] * a[q, q])
                    ):
                        _rotate(a, V, p, q)

    values = np.diag(a).copy()
    order = np.argsort(values, kind="stable")
    return values[order], V[:, order]


def symmetric_eig(S: np.ndarray, relative_polish: bool = False) -> list[EigenPair]:
    """Full eigendecomposition of a symmetric matrix by cyclic Jacobi.

    Values ascend; vectors are unit 2-norm, pairwise orthonormal, and
    sign-pinned for reproducibility. ``relative_polish`` adds extra
    sweeps that shrink each off-diagonal relative to its diagonal pair,
    which positive definite matrices with widely spread spectra need
    for pairwise conjugacy of the eigenvectors.
    """
    values, V = _jacobi(np.asarray(S, dtype=float), relative_polish=relative_polish)
    return [EigenPair(float(values[j]), _pin_sign(V[:, j].copy())) for j in range(len(values))]


def _reorthogonalize_clusters(values: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Gram-Schmidt within clusters of near-equal eigenvalues."""
    n = len(values)
    start = 0
    V = V.copy()
    while start < n:
        stop = start + 1
        while stop < n and abs(values[stop] - values[stop - 1]) <= EIG_CLUSTER_TOL * max(
            1.0, abs(values[stop]), abs(values[stop - 1])
        ):
            stop += 1
        if stop - start > 1:
            for j in range(start, stop):
                v = V[:, j]
                for i in range(start, j):
                    v = v - (V[:, i] @ v) * V[:, i]
                V[:, j] = v / np.linalg.norm(v)
        start = stop
    return V


def generalized_eig(S: np.ndarray, B: np.ndarray) -> list[EigenPair]:
    """Eigenpairs of the symmetric-definite pencil S d = lambda B d.

    B is reduced by Cholesky (B = L L'), the congruent matrix
    L^-1 S L^-T is diagonalized by Jacobi, and directions are mapped
    back through L^-T. The resulting directions are simultaneously
    conjugate for S and for B; eigenvectors inside near-degenerate
    clusters are re-orthogonalized so the guarantee holds pairwise.
    Directions come back unit 2-norm, sign-pinned, values ascending.
    """
    S = np.asarray(S, dtype=float)
    L = cholesky(B)
    C = solve_lower(L, solve_lower(L, S).T)
    C = 0.5 * (C + C.T)
    values, V = _jacobi(C, relative_polish=True)
    V = _reorthogonalize_clusters(values, V)
    D = solve_lower_transpose(L, V)
    pairs = []
    for j in range(D.shape[1]):
        d = D[:, j]
        d = _pin_sign(d / np.linalg.norm(d))
        pairs.append(EigenPair(float(values[j]), d))
    return pairs


def cg_solve(
    op: SpdOperator,
    b: np.ndarray,
    x0: np.ndarray,
    rel_tol: float,
    max_iter: int,
    residual_log: list | None = None,
) -> tuple[np.ndarray, CgTrace]:
    """Conjugate gradients for (op) x = b from the warm start x0.

    Stops when ``norm(r) <= rel_tol * max(norm(b), eps_machine)`` or
    after ``max_iter`` steps. Raises :class:`CgBreakdownError` when the
    curvature p'Mp is nonpositive. ``residual_log``, when given, collects
    a copy of every residual vector (test instrumentation).
    """
    if rel_tol <= 0.0:
        raise ValueError("rel_tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be >= 1")
    n = op.n
    flops_start = op.flops
    extra = 0

    b_norm = float(np.linalg.norm(b))
    extra += 2 * n
    threshold = rel_tol * max(b_norm, _EPS)

    x = np.array(x0, dtype=float, copy=True)
    r = op.apply(x) - b
    rs = float(r @ r)
    extra += 2 * n
    if residual_log is not None:
        residual_log.append(r.copy())
    p = -r
    iterations = 0
    while math.sqrt(rs) > threshold and iterations < max_iter:
        mp = op.apply(p)
        curvature = float(p @ mp)
        extra += 2 * n
        if curvature <= 0.0:
            raise CgBreakdownError(f"nonpositive curvature {curvature:.3e}")
        alpha = rs / curvature
        x = x + alpha * p
        r = r + alpha * mp
        extra += 4 * n
        rs_new = float(r @ r)
        extra += 2 * n
        beta = rs_new / rs
        p = -r + beta * p
        extra += 2 * n
        rs = rs_new
        iterations += 1
        if residual_log is not None:
            residual_log.append(r.copy())

    if iterations == 0:
        # The initial residual is already the true residual of x.
        final_rel = math.sqrt(rs) / max(b_norm, _EPS)
    else:
        true_res = op.apply(x) - b
        final_rel = float(np.linalg.norm(true_res)) / max(b_norm, _EPS)
        extra += 2 * n
    trace = CgTrace(
        iterations=iterations,
        final_relative_residual=final_rel,
        flops=(op.flops - flops_start) + extra,
    )
    return x, trace


def cd_solve(op: SpdOperator, b: np.ndarray, dirs) -> tuple[np.ndarray, CgTrace]:
    """Solve (op) x = b by recombining cached conjugate directions.

    From the zero start, the step along direction d_k is
    ``d_k' b / (t1_k + scale * t2_k)``; by the expanding-subspace
    property this equals running the classical conjugate-directions
    recursion, but with the quadratic forms read from the cache instead
    of recomputed, so no operator applications are needed for the
    coefficients. Always exactly n coefficient steps. One application
    is then spent measuring the true residual for the trace.
    """
    n = op.n
    flops_start = op.flops
    kappa = dirs.t1 + op.scale * dirs.t2
    bad = np.nonzero(kappa <= 0.0)[0]
    if bad.size:
        raise StaleDirectionsError(
            f"cached quadratic form is nonpositive at direction {bad[0]} "
            f"(kappa={kappa[bad[0]]:.3e}); cache does not match the operator"
        )
    D = dirs.directions  # row k is d_k
    coef = (D @ b) / kappa
    x = D.T @ coef
    extra = 4 * n * n

    b_norm = float(np.linalg.norm(b))
    res = op.apply(x) - b
    final_rel = float(np.linalg.norm(res)) / max(b_norm, _EPS)
    extra += 4 * n
    trace = CgTrace(
        iterations=n,
        final_relative_residual=final_rel,
        flops=(op.flops - flops_start) + extra,
    )
    return x, trace


def cd_then_cg_polish(
    op: SpdOperator, b: np.ndarray, dirs, rel_tol: float, max_extra: int
) -> tuple[np.ndarray, CgTrace]:
    """Direction recombination, then CG cleanup if the residual is loose.

    With exactly conjugate directions the polish never runs. The trace
    aggregates both phases, so polish steps show up as
    ``trace.iterations - n``.
    """
    x, trace = cd_solve(op, b, dirs)
    if trace.final_relative_residual <= rel_tol or max_extra < 1:
        return x, trace
    x, cg_trace = cg_solve(op, b, x, rel_tol, max_extra)
    return x, CgTrace(
        iterations=trace.iterations + cg_trace.iterations,
        final_relative_residual=cg_trace.final_relative_residual,
        flops=trace.flops + cg_trace.flops,
    )
