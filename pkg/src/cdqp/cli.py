"""Command-line harness.

Subcommands:

* ``offline``  compute and store a direction cache for a problem file
* ``check``    verify the conjugacy of a stored cache
* ``bench``    seeded ensemble benchmark over random initial points
* ``trace``    per-iteration residual trace to CSV

Exit codes: 0 success, 1 usage error, 2 parse/validation/I-O error,
3 solver or verification failure.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .bench import BenchmarkRunError, run_benchmark
from .formats import ParseError, load_cache, load_problem, write_cache, write_trace
from .linalg import (
    CgBreakdownError,
    EigenConvergenceError,
    NotPositiveDefiniteError,
    StaleDirectionsError,
)
from .offline import compute_offline, conjugacy_check, rho_init
from .oracle import OracleError
from .problem import ValidationError
from .solver import (
    BACKEND_CACHED_CD,
    BACKEND_CG,
    RHO_MODE_EQ_INIT,
    RHO_MODE_OFFLINE,
    STATUS_SOLVED,
    SolverSettings,
    instrumented_solve,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SOLVER = 3

_SOLVER_ERRORS = (
    CgBreakdownError,
    EigenConvergenceError,
    NotPositiveDefiniteError,
    StaleDirectionsError,
    OracleError,
    BenchmarkRunError,
)


def _add_solver_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--sigma", type=float, default=None,
                        help="regularization of the inner system (default: cache value)")
    parser.add_argument("--gamma", type=float, default=1.3, help="relaxation parameter")
    parser.add_argument("--rho-bar", type=float, default=0.1, help="base penalty weight")
    parser.add_argument("--nc", type=int, default=5,
                        help="iteration after which penalty updates freeze")
    parser.add_argument("--eps-prim", type=float, default=1e-4)
    parser.add_argument("--eps-dual", type=float, default=1e-4)
    parser.add_argument("--max-outer", type=int, default=4000)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cdqp",
        description="Dense box-constrained QP solver with cached conjugate directions.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_off = sub.add_parser("offline", help="compute a direction cache for a problem")
    p_off.add_argument("problem", help="problem document path")
    p_off.add_argument("--sigma", type=float, default=1e-4)
    p_off.add_argument("--rho-bar", type=float, default=0.1)
    p_off.add_argument("--out", required=True, help="cache output path")

    p_check = sub.add_parser("check", help="verify the conjugacy of a cache")
    p_check.add_argument("problem")
    p_check.add_argument("cache")
    p_check.add_argument("--tol", type=float, default=1e-8)

    p_bench = sub.add_parser("bench", help="ensemble benchmark from seeded random starts")
    p_bench.add_argument("problem")
    p_bench.add_argument("cache")
    p_bench.add_argument("--backend", choices=[BACKEND_CG, BACKEND_CACHED_CD, "both"],
                         default="both")
    p_bench.add_argument("--runs", type=int, default=1000)
    p_bench.add_argument("--seed", type=int, default=0)
    p_bench.add_argument("--x0", default=None,
                         help="fixed comma-separated initial point for every run "
                              "(default: seeded random draws)")
    p_bench.add_argument("--out", default=None, help="optional JSON report path")
    _add_solver_flags(p_bench)

    p_trace = sub.add_parser("trace", help="export per-iteration residuals to CSV")
    p_trace.add_argument("problem")
    p_trace.add_argument("cache")
    p_trace.add_argument("--x0", default=None,
                         help="comma-separated initial point (default: zeros)")
    p_trace.add_argument("--init", choices=["offline", "eq7"], default="offline",
                         help="penalty initialization: the cached diagonal, or the "
                              "l/u-based rule with --rho-bar")
    p_trace.add_argument("--backend", choices=[BACKEND_CG, BACKEND_CACHED_CD], default=None,
                         help="default: cached-cd for --init offline, cg for --init eq7")
    p_trace.add_argument("--seed", type=int, default=0)
    p_trace.add_argument("--out", required=True, help="CSV output path")
    _add_solver_flags(p_trace)

    return parser


def _parse_x0(text: str | None, n: int) -> np.ndarray | None:
    if text is None:
        return None
    parts = [p for chunk in text.split(",") for p in chunk.split()]
    try:
        values = np.array([float(p) for p in parts])
    except ValueError:
        raise ValidationError(f"could not parse --x0 value {text!r}") from None
    if values.shape != (n,):
        raise ValidationError(f"--x0 has {values.size} entries, expected {n}")
    return values


def _settings_from_args(args, cache_sigma: float) -> SolverSettings:
    return SolverSettings(
        sigma=args.sigma if args.sigma is not None else cache_sigma,
        gamma=args.gamma,
        rho_bar=args.rho_bar,
        n_c=args.nc,
        eps_prim=args.eps_prim,
        eps_dual=args.eps_dual,
        max_outer=args.max_outer,
        seed=getattr(args, "seed", 0),
    )


def _cmd_offline(args) -> int:
    problem = load_problem(args.problem)
    seed_rho = rho_init(problem, args.rho_bar)
    dirs, rho_off = compute_offline(problem, args.sigma, seed_rho)
    write_cache(args.out, dirs, rho_off, args.sigma)
    report = conjugacy_check(dirs, problem, args.sigma, rho_off, tol=1e-8)
    print(f"cache written to {args.out} (strategy: {dirs.strategy})")
    print(f"split conjugacy residuals: objective {report.objective_residual:.3e}, "
          f"penalty {report.penalty_residual:.3e}, combined {report.combined_residual:.3e}")
    if dirs.scale_fragile:
        print("warning: constraint matrix is column-rank-deficient; cache is "
              "scale-fragile (conjugacy holds at scale 1 only)", file=sys.stderr)
    return EXIT_OK


def _cmd_check(args) -> int:
    problem = load_problem(args.problem)
    dirs, rho, sigma = load_cache(args.cache)
    report = conjugacy_check(dirs, problem, sigma, rho, tol=args.tol)
    print(f"objective residual: {report.objective_residual:.3e}")
    print(f"penalty residual:   {report.penalty_residual:.3e}")
    print(f"combined residual:  {report.combined_residual:.3e}")
    print(f"tolerance {args.tol:g}: {'pass' if report.passed else 'FAIL'}")
    return EXIT_OK if report.passed else EXIT_SOLVER


def _cmd_bench(args) -> int:
    if args.runs < 1:
        print("error: --runs must be >= 1", file=sys.stderr)
        return EXIT_USAGE
    problem = load_problem(args.problem)
    dirs, rho, cache_sigma = load_cache(args.cache)
    settings = _settings_from_args(args, cache_sigma)
    backends = (BACKEND_CG, BACKEND_CACHED_CD) if args.backend == "both" else (args.backend,)
    report = run_benchmark(problem, (dirs, rho), settings, backends, args.runs, args.seed,
                           x0=_parse_x0(args.x0, problem.n))
    print(report.table())
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2)
        print(f"report written to {args.out}")
    return EXIT_OK


def _cmd_trace(args) -> int:
    problem = load_problem(args.problem)
    dirs, rho, cache_sigma = load_cache(args.cache)
    settings = _settings_from_args(args, cache_sigma)
    if args.init == "offline":
        settings.rho_mode = RHO_MODE_OFFLINE
        settings.backend = args.backend or BACKEND_CACHED_CD
    else:
        settings.rho_mode = RHO_MODE_EQ_INIT
        settings.backend = args.backend or BACKEND_CG
    offline = (dirs, rho) if (settings.backend == BACKEND_CACHED_CD
                              or settings.rho_mode == RHO_MODE_OFFLINE) else None
    x0 = _parse_x0(args.x0, problem.n)
    result = instrumented_solve(problem, settings, offline=offline, x0=x0)
    write_trace(args.out, result)
    print(f"{result.outer_iterations} iterations, status {result.status}; "
          f"trace written to {args.out}")
    return EXIT_OK if result.status == STATUS_SOLVED else EXIT_SOLVER


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage problems and 0 for --help.
        return EXIT_OK if exc.code == 0 else EXIT_USAGE

    dispatch = {
        "offline": _cmd_offline,
        "check": _cmd_check,
        "bench": _cmd_bench,
        "trace": _cmd_trace,
    }
    try:
        return dispatch[args.command](args)
    except (ParseError, ValidationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except _SOLVER_ERRORS as exc:
        print(f"solver error: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def entry() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    raise SystemExit(main())
