"""Benchmark ensembles: repeated solves from seeded random initial points.

Every run draws its initial point from the pinned normal stream (see
:mod:`cdqp.rng`), so a (seed, runs) pair fixes the exact ensemble. All
backends see identical initial points. Wall-clock columns are reported
for context but are hardware-dependent; the flop column is the
deterministic comparison.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .rng import NormalStream
from .solver import (
    RHO_MODE_OFFLINE,
    STATUS_SOLVED,
    SolverSettings,
    instrumented_solve,
)


class BenchmarkRunError(RuntimeError):
    """A benchmark run failed to solve; names the run index and backend."""

    def __init__(self, run_index: int, backend: str, status: str):
        super().__init__(f"run {run_index} failed on backend {backend!r}: status {status}")
        self.run_index = run_index
        self.backend = backend
        self.status = status


@dataclass(frozen=True)
class BenchRow:
    backend: str
    mean_t_tot: float
    mean_t_inv: float
    mean_outer_iterations: float
    mean_inner_flops: float


@dataclass(frozen=True)
class BenchmarkReport:
    runs: int
    seed: int
    settings: dict
    rows: tuple[BenchRow, ...]

    def table(self) -> str:
        header = (
            f"{'backend':<12} {'mean T_tot (ms)':>16} {'mean T_inv (ms)':>16} "
            f"{'mean N':>8} {'mean inner flops':>18}"
        )
        lines = [header, "-" * len(header)]
        for row in self.rows:
            lines.append(
                f"{row.backend:<12} {1e3 * row.mean_t_tot:>16.4f} "
                f"{1e3 * row.mean_t_inv:>16.4f} {row.mean_outer_iterations:>8.2f} "
                f"{row.mean_inner_flops:>18.1f}"
            )
        lines.append(f"runs={self.runs} seed={self.seed}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "seed": self.seed,
            "settings": self.settings,
            "rows": [dataclasses.asdict(row) for row in self.rows],
        }


def run_benchmark(
    problem,
    offline,
    settings: SolverSettings,
    backends: tuple[str, ...],
    runs: int,
    seed: int,
    x0=None,
) -> BenchmarkReport:
    """Average T_tot, T_inv, N, and inner flops over ``runs`` solves.

    Initial points are pre-drawn (run r uses draws r*n .. r*n+n-1 of the
    stream), so the run-to-x0 mapping depends only on the seed; a fixed
    ``x0`` replaces the random draws in every run. Any non-solved status
    aborts with :class:`BenchmarkRunError`.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    if x0 is not None:
        starts = [x0] * runs
    else:
        stream = NormalStream(seed)
        starts = [stream.standard_normal(problem.n) for _ in range(runs)]

    rows = []
    for backend in backends:
        run_settings = dataclasses.replace(settings, backend=backend, rho_mode=RHO_MODE_OFFLINE)
        t_tot = t_inv = iters = flops = 0.0
        for r, x0 in enumerate(starts):
            result = instrumented_solve(problem, run_settings, offline=offline, x0=x0)
            if result.status != STATUS_SOLVED:
                raise BenchmarkRunError(r, backend, result.status)
            t_tot += result.wall_time_total
            t_inv += result.inner_time_total
            iters += result.outer_iterations
            flops += result.inner_flops_total
        rows.append(
            BenchRow(
                backend=backend,
                mean_t_tot=t_tot / runs,
                mean_t_inv=t_inv / runs,
                mean_outer_iterations=iters / runs,
                mean_inner_flops=flops / runs,
            )
        )

    echo = dataclasses.asdict(settings)
    echo.pop("backend", None)
    return BenchmarkReport(runs=runs, seed=seed, settings=echo, rows=tuple(rows))
