"""Operator-splitting outer loop with pluggable inner linear solvers.

Each outer iteration solves the reduced SPD system

    (P + sigma*I + A' rho A) x_t = sigma*x - q + A'(rho*z - y)

either by warm-started conjugate gradients (``backend="cg"``) or by
recombining offline-cached conjugate directions (``backend="cached-cd"``),
then applies the relaxed z/y updates with projection onto the box. The
diagonal penalty carries one scalar scale, rebalanced from the
primal/dual residual ratio for the first ``n_c`` iterations and frozen
afterwards. Termination is on 2-norms of both residuals.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .linalg import (
    CgBreakdownError,
    SpdOperator,
    StaleDirectionsError,
    cd_then_cg_polish,
    cg_solve,
)
from .offline import (
    AugmentationMatrix,
    ConjugateDirectionSet,
    data_fingerprint,
    rho_init,
)
from .problem import Iterate, QpProblem, Residuals, project_box, residuals

BACKEND_CG = "cg"
BACKEND_CACHED_CD = "cached-cd"
RHO_MODE_OFFLINE = "offline"
RHO_MODE_EQ_INIT = "eq7-init"

STATUS_SOLVED = "solved"
STATUS_MAX_ITERATIONS = "max-iterations"
STATUS_INNER_FAILURE = "inner-failure"

DEGENERATE_NORM_FLOOR = 1e-14
# Tolerates recurrence-vs-true residual round-off at the stopping boundary.
INNER_FAILURE_SLACK = 10.0


@dataclass
class SolverSettings:
    sigma: float = 1e-4
    gamma: float = 1.3
    rho_bar: float = 0.1
    n_c: int = 5
    eps_prim: float = 1e-4
    eps_dual: float = 1e-4
    max_outer: int = 4000
    inner_rel_tol: float = 1e-10
    inner_max: int | None = None  # defaults to 10n at solve time
    backend: str = BACKEND_CG
    rho_mode: str = RHO_MODE_EQ_INIT
    scale_clamp: tuple[float, float] = (1e-6, 1e6)
    seed: int = 0

    def __post_init__(self):
        if self.sigma <= 0.0:
            raise ValueError("sigma must be positive")
        if not 0.0 < self.gamma < 2.0:
            raise ValueError("gamma must lie in (0, 2)")
        if self.rho_bar <= 0.0:
            raise ValueError("rho_bar must be positive")
        if self.n_c <= 2:
            raise ValueError("n_c must be > 2")
        if self.eps_prim <= 0.0 or self.eps_dual <= 0.0 or self.inner_rel_tol <= 0.0:
            raise ValueError("tolerances must be positive")
        if self.max_outer < 1:
            raise ValueError("max_outer must be >= 1")
        if self.backend not in (BACKEND_CG, BACKEND_CACHED_CD):
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.rho_mode not in (RHO_MODE_OFFLINE, RHO_MODE_EQ_INIT):
            raise ValueError(f"unknown rho_mode {self.rho_mode!r}")
        lo, hi = self.scale_clamp
        if not 0.0 < lo < hi:
            raise ValueError("scale_clamp must satisfy 0 < lo < hi")


@dataclass
class SolveResult:
    x: np.ndarray
    z: np.ndarray
    y: np.ndarray
    status: str
    outer_iterations: int
    # One row per completed iteration: (prim_2, dual_2, prim_inf, dual_inf).
    residual_history: np.ndarray
    # Scale in effect during each iteration's inner solve.
    rho_scale_history: np.ndarray
    inner_flops_total: int = 0
    inner_time_total: float = 0.0
    wall_time_total: float = 0.0


def rho_update(
    problem: QpProblem,
    iterate: Iterate,
    res: Residuals,
    rho: AugmentationMatrix,
    clamp: tuple[float, float],
) -> AugmentationMatrix:
    """Rebalance the scalar penalty scale from the residual ratio.

    The factor is sqrt of (relative primal residual) / (relative dual
    residual), measured in infinity norms. Degenerate normalizers or a
    non-finite factor skip the update; both the factor and the updated
    scale are clamped into ``clamp``.
    """
    num_scale = max(
        float(np.max(np.abs(problem.A @ iterate.x))), float(np.max(np.abs(iterate.z)))
    )
    den_scale = max(
        float(np.max(np.abs(problem.P @ iterate.x))),
        float(np.max(np.abs(problem.A.T @ iterate.y))),
        float(np.max(np.abs(problem.q))),
    )
    if num_scale <= DEGENERATE_NORM_FLOOR or den_scale <= DEGENERATE_NORM_FLOOR:
        return rho
    dual_ratio = res.dual_norm_inf / den_scale
    if dual_ratio <= 0.0:
        return rho
    factor = math.sqrt((res.prim_norm_inf / num_scale) / dual_ratio)
    if not math.isfinite(factor):
        return rho
    lo, hi = clamp
    factor = min(max(factor, lo), hi)
    new_scale = min(max(rho.scale * factor, lo), hi)
    return AugmentationMatrix(rho.rho_base, new_scale)


def _initial_rho(problem, settings, offline):
    dirs = rho = None
    if offline is not None:
        dirs, rho = offline
    if settings.backend == BACKEND_CACHED_CD:
        if offline is None:
            raise ValueError("backend 'cached-cd' requires offline direction data")
        expected = data_fingerprint(problem.P, problem.A, settings.sigma, rho.rho_base)
        if dirs.fingerprint != expected:
            raise StaleDirectionsError(
                "direction cache fingerprint does not match the problem data"
            )
        return dirs, rho
    if settings.rho_mode == RHO_MODE_OFFLINE:
        if offline is None:
            raise ValueError("rho_mode 'offline' requires offline direction data")
        return dirs, rho
    return dirs, rho_init(problem, settings.rho_bar)


def _run(problem, settings, offline, x0, timed, callback):
    t_start = time.perf_counter()
    n, m = problem.n, problem.m
    dirs, rho = _initial_rho(problem, settings, offline)
    inner_max = settings.inner_max if settings.inner_max is not None else 10 * n

    x = np.zeros(n) if x0 is None else np.array(x0, dtype=float, copy=True)
    if x.shape != (n,):
        raise ValueError(f"x0 has shape {x.shape}, expected ({n},)")
    z = project_box(problem.A @ x, problem.l, problem.u)
    y = np.zeros(m)
    xt = x.copy()

    history = []
    scale_history = []
    inner_flops = 0
    inner_time = 0.0
    status = STATUS_MAX_ITERATIONS

    for k in range(settings.max_outer):
        rho_eff = rho.effective()
        op = SpdOperator(problem.P, problem.A, settings.sigma, rho.rho_base, rho.scale)
        rhs = settings.sigma * x - problem.q + problem.A.T @ (rho_eff * z - y)

        t0 = time.perf_counter() if timed else 0.0
        try:
            if settings.backend == BACKEND_CACHED_CD:
                xt, trace = cd_then_cg_polish(op, rhs, dirs, settings.inner_rel_tol, inner_max)
            else:
                xt, trace = cg_solve(op, rhs, xt, settings.inner_rel_tol, inner_max)
        except CgBreakdownError:
            status = STATUS_INNER_FAILURE
            break
        if timed:
            inner_time += time.perf_counter() - t0
        inner_flops += trace.flops
        if trace.final_relative_residual > INNER_FAILURE_SLACK * settings.inner_rel_tol:
            status = STATUS_INNER_FAILURE
            break

        zt = problem.A @ xt
        x = settings.gamma * xt + (1.0 - settings.gamma) * x
        z_relax = settings.gamma * zt + (1.0 - settings.gamma) * z
        z_new = project_box(z_relax + y / rho_eff, problem.l, problem.u)
        y = y + rho_eff * (z_relax - z_new)
        z = z_new

        iterate = Iterate(x=x, z=z, y=y, k=k + 1)
        res = residuals(problem, iterate)
        history.append((res.prim_norm_2, res.dual_norm_2, res.prim_norm_inf, res.dual_norm_inf))
        scale_history.append(rho.scale)
        if callback is not None:
            callback(iterate)

        if res.prim_norm_2 < settings.eps_prim and res.dual_norm_2 < settings.eps_dual:
            status = STATUS_SOLVED
            break
        if k < settings.n_c:
            rho = rho_update(problem, iterate, res, rho, settings.scale_clamp)

    wall = time.perf_counter() - t_start if timed else 0.0
    return SolveResult(
        x=x,
        z=z,
        y=y,
        status=status,
        outer_iterations=len(history),
        residual_history=np.array(history).reshape(len(history), 4),
        rho_scale_history=np.array(scale_history),
        inner_flops_total=inner_flops,
        inner_time_total=inner_time,
        wall_time_total=wall,
    )


def solve(
    problem: QpProblem,
    settings: SolverSettings,
    offline: tuple[ConjugateDirectionSet, AugmentationMatrix] | None = None,
    x0: np.ndarray | None = None,
    callback=None,
) -> SolveResult:
    """Run the outer loop; see module docstring for the iteration.

    ``offline`` supplies the cached direction set and its diagonal; it
    is mandatory for ``backend="cached-cd"`` (with a matching
    fingerprint) and for ``rho_mode="offline"``. ``callback``, when
    given, receives the :class:`Iterate` after every completed
    iteration. Wall-clock fields stay zero; use
    :func:`instrumented_solve` for timings.
    """
    return _run(problem, settings, offline, x0, timed=False, callback=callback)


def instrumented_solve(
    problem: QpProblem,
    settings: SolverSettings,
    offline: tuple[ConjugateDirectionSet, AugmentationMatrix] | None = None,
    x0: np.ndarray | None = None,
    callback=None,
) -> SolveResult:
    """Exactly :func:`solve`, plus monotonic-clock timing.

    ``inner_time_total`` wraps only the inner linear solves;
    ``wall_time_total`` wraps the whole call. Timing never changes the
    iterate sequence.
    """
    return _run(problem, settings, offline, x0, timed=True, callback=callback)
