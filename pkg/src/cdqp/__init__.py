"""Dense box-constrained QP solver with cached conjugate-direction inner solves."""

from .bench import BenchmarkReport, BenchmarkRunError, BenchRow, run_benchmark
from .formats import (
    ParseError,
    load_cache,
    load_problem,
    write_cache,
    write_problem,
    write_trace,
)
from .linalg import (
    CgBreakdownError,
    CgTrace,
    EigenConvergenceError,
    EigenPair,
    NotPositiveDefiniteError,
    SpdOperator,
    StaleDirectionsError,
    cd_solve,
    cd_then_cg_polish,
    cg_solve,
    cholesky,
    generalized_eig,
    symmetric_eig,
)
from .offline import (
    AugmentationMatrix,
    ConjugacyReport,
    ConjugateDirectionSet,
    ScaleFragileWarning,
    compute_offline,
    conjugacy_check,
    data_fingerprint,
    rescale,
    rho_init,
)
from .oracle import OracleError, kkt_oracle, kkt_report
from .problem import (
    Iterate,
    KktReport,
    QpProblem,
    Residuals,
    ValidationError,
    project_box,
    residuals,
    validate,
)
from .rng import NormalStream, SplitMix64
from .solver import (
    BACKEND_CACHED_CD,
    BACKEND_CG,
    RHO_MODE_EQ_INIT,
    RHO_MODE_OFFLINE,
    STATUS_INNER_FAILURE,
    STATUS_MAX_ITERATIONS,
    STATUS_SOLVED,
    SolveResult,
    SolverSettings,
    instrumented_solve,
    rho_update,
    solve,
)

__version__ = "0.1.0"
