"""Brute-force optimality oracle for small box-constrained QPs.

Enumerates every assignment of constraints to {inactive, at lower bound,
at upper bound}, solves the equality-constrained stationarity system
for each, and keeps the feasible candidate with correctly signed
multipliers and the smallest objective. Cost grows as 3^m, so this is
restricted to m <= 12. The linear solves go through ``numpy.linalg`` on
purpose: the oracle stays independent of the solver kernels it is used
to check.
"""

from __future__ import annotations

import itertools

import numpy as np

from .problem import KktReport, QpProblem

INACTIVE, AT_LOWER, AT_UPPER = 0, 1, 2

MAX_ORACLE_M = 12


class OracleError(RuntimeError):
    """No candidate active set yields a feasible KKT point."""


def _roles_for_constraint(l_i: float, u_i: float) -> tuple[int, ...]:
    if l_i == u_i:
        # Equality row: always active, multiplier sign free.
        return (AT_LOWER,)
    roles = [INACTIVE]
    if np.isfinite(l_i):
        roles.append(AT_LOWER)
    if np.isfinite(u_i):
        roles.append(AT_UPPER)
    return tuple(roles)


def kkt_oracle(
    problem: QpProblem, tol: float = 1e-8
) -> tuple[np.ndarray, np.ndarray, KktReport]:
    """Ground-truth (x*, y*) by exhaustive active-set enumeration.

    Candidates with singular stationarity systems are skipped. Raises
    :class:`OracleError` if no assignment produces a feasible, correctly
    signed KKT point.
    """
    P, q, A, l, u = problem.P, problem.q, problem.A, problem.l, problem.u
    n, m = problem.n, problem.m
    if m > MAX_ORACLE_M:
        raise ValueError(f"oracle enumeration needs m <= {MAX_ORACLE_M}, got m={m}")

    best_obj = None
    best_x = None
    best_y = None
    per_constraint = [_roles_for_constraint(l[i], u[i]) for i in range(m)]
    for roles in itertools.product(*per_constraint):
        active = [i for i in range(m) if roles[i] != INACTIVE]
        k = len(active)
        target = np.array([l[i] if roles[i] == AT_LOWER else u[i] for i in active])

        kkt = np.zeros((n + k, n + k))
        kkt[:n, :n] = P
        if k:
            kkt[:n, n:] = A[active].T
            kkt[n:, :n] = A[active]
        rhs = np.concatenate([-q, target])
        try:
            sol = np.linalg.solve(kkt, rhs)
        except np.linalg.LinAlgError:
            continue
        # Near-singular systems slip past LinAlgError; reject by substitution.
        if np.max(np.abs(kkt @ sol - rhs)) > 1e-8 * (1.0 + np.max(np.abs(rhs))):
            continue

        x = sol[:n]
        y = np.zeros(m)
        y[active] = sol[n:]
        ax = A @ x
        if np.any(ax < l - tol) or np.any(ax > u + tol):
            continue
        sign_ok = True
        for i in active:
            if l[i] == u[i]:
                continue
            if roles[i] == AT_LOWER and y[i] > tol:
                sign_ok = False
                break
            if roles[i] == AT_UPPER and y[i] < -tol:
                sign_ok = False
                break
        if not sign_ok:
            continue

        obj = problem.objective(x)
        if best_obj is None or obj < best_obj:
            best_obj, best_x, best_y = obj, x, y

    if best_x is None:
        raise OracleError("no feasible KKT candidate found (degenerate problem)")
    return best_x, best_y, kkt_report(problem, best_x, best_y, tol)


def kkt_report(problem: QpProblem, x: np.ndarray, y: np.ndarray, tol: float) -> KktReport:
    """Measure stationarity, feasibility, and complementarity at (x, y)."""
    ax = problem.A @ x
    stationarity = float(np.max(np.abs(problem.P @ x + problem.q + problem.A.T @ y)))

    lower_gap = np.where(np.isfinite(problem.l), ax - problem.l, np.inf)
    upper_gap = np.where(np.isfinite(problem.u), problem.u - ax, np.inf)
    feasibility = float(max(np.max(np.maximum(-lower_gap, 0.0), initial=0.0),
                            np.max(np.maximum(-upper_gap, 0.0), initial=0.0)))

    # y > 0 must pair with a tight finite upper bound, y < 0 with a tight
    # finite lower bound; an infinite bound leaves the bare multiplier as
    # the violation.
    y_pos = np.maximum(y, 0.0)
    y_neg = np.maximum(-y, 0.0)
    comp_upper = np.abs(y_pos * np.where(np.isfinite(problem.u), upper_gap, 1.0))
    comp_lower = np.abs(y_neg * np.where(np.isfinite(problem.l), lower_gap, 1.0))
    complementarity = float(max(np.max(comp_upper, initial=0.0),
                                np.max(comp_lower, initial=0.0)))

    passed = stationarity <= tol and feasibility <= tol and complementarity <= tol
    return KktReport(
        stationarity_norm=stationarity,
        feasibility_norm=feasibility,
        complementarity_norm=complementarity,
        passed=passed,
    )
