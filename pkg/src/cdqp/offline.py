"""Offline phase: joint choice of the diagonal augmentation and directions.

The inner linear systems all share the coefficient matrix
``P + sigma*I + A' rho A`` with ``rho`` a positive diagonal. Fixing the
diagonal ``rho_off`` and taking eigenvectors of the symmetric-definite
pencil ``(P + sigma*I, A' rho_off A)`` yields directions that are
conjugate for the two terms separately, so conjugacy survives any
scalar rescaling of ``rho``. Caching the per-direction quadratic forms
of each term lets later solves rebuild ``d' M(s) d = t1 + s*t2`` in
O(1) per direction, at any scale s.

When A is column-rank-deficient the pencil degenerates; the fallback
takes eigenvectors of the combined matrix at scale 1, which are only
conjugate at that scale. Such caches are flagged scale-fragile and the
solver must polish after rescaling.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass

import numpy as np

from .linalg import NotPositiveDefiniteError, generalized_eig, symmetric_eig
from .problem import QpProblem

STRATEGY_PENCIL = "pencil"
STRATEGY_COMBINED = "combined"

GRAM_DET_FLOOR = 1e-12
EQUALITY_RHO_FACTOR = 1e3


class ScaleFragileWarning(UserWarning):
    """Fallback directions in use; conjugacy holds at scale 1 only."""


@dataclass(frozen=True)
class AugmentationMatrix:
    """Positive diagonal penalty ``scale * diag(rho_base)``.

    ``rho_base`` is fixed by the offline phase; adaptive updates touch
    only the scalar ``scale``. Values are immutable; rescaling returns
    a new instance.
    """

    rho_base: np.ndarray
    scale: float = 1.0

    def __post_init__(self):
        base = np.asarray(self.rho_base, dtype=float)
        if base.ndim != 1 or base.size == 0:
            raise ValueError("rho_base must be a nonempty vector")
        if not np.all(np.isfinite(base)) or np.any(base <= 0.0):
            raise ValueError("rho_base entries must be positive and finite")
        if not np.isfinite(self.scale) or self.scale <= 0.0:
            raise ValueError(f"scale must be positive and finite, got {self.scale}")
        base = base.copy()
        base.flags.writeable = False
        object.__setattr__(self, "rho_base", base)
        object.__setattr__(self, "scale", float(self.scale))

    @property
    def m(self) -> int:
        return self.rho_base.shape[0]

    def effective(self) -> np.ndarray:
        """The current diagonal, scale * rho_base."""
        return self.scale * self.rho_base

    def rescaled(self, factor: float) -> "AugmentationMatrix":
        if not np.isfinite(factor) or factor <= 0.0:
            raise ValueError(f"rescale factor must be positive and finite, got {factor}")
        return AugmentationMatrix(self.rho_base, self.scale * factor)


@dataclass(frozen=True)
class ConjugateDirectionSet:
    """n cached directions with split quadratic forms.

    ``directions`` holds one unit-norm direction per row. ``t1[k]`` is
    the form against ``P + sigma*I``, ``t2[k]`` against
    ``A' rho_base A``, so ``d_k' M(s) d_k = t1[k] + s*t2[k]`` exactly
    for pencil-strategy sets. ``fingerprint`` ties the cache to the
    data it was computed from.
    """

    directions: np.ndarray
    t1: np.ndarray
    t2: np.ndarray
    fingerprint: str
    strategy: str = STRATEGY_PENCIL

    def __post_init__(self):
        D = np.asarray(self.directions, dtype=float)
        t1 = np.asarray(self.t1, dtype=float)
        t2 = np.asarray(self.t2, dtype=float)
        n = D.shape[0]
        if D.shape != (n, n):
            raise ValueError(f"directions must be square, got shape {D.shape}")
        if t1.shape != (n,) or t2.shape != (n,):
            raise ValueError("t1 and t2 must have one entry per direction")
        if np.any(t1 <= 0.0):
            raise ValueError("t1 entries must be positive (is sigma > 0?)")
        if np.any(t2 < -1e-12 * max(1.0, float(np.max(t2, initial=0.0)))):
            raise ValueError("t2 entries must be nonnegative")
        gram = D @ D.T
        if abs(float(np.linalg.det(gram))) < GRAM_DET_FLOOR:
            raise ValueError("directions are not linearly independent")
        if self.strategy not in (STRATEGY_PENCIL, STRATEGY_COMBINED):
            raise ValueError(f"unknown strategy {self.strategy!r}")
        for arr in (D, t1, t2):
            arr.flags.writeable = False
        object.__setattr__(self, "directions", D)
        object.__setattr__(self, "t1", t1)
        object.__setattr__(self, "t2", t2)

    @property
    def n(self) -> int:
        return self.directions.shape[0]

    @property
    def scale_fragile(self) -> bool:
        return self.strategy == STRATEGY_COMBINED

    @classmethod
    def from_directions(
        cls,
        raw_directions: np.ndarray,
        problem: QpProblem,
        sigma: float,
        rho: AugmentationMatrix,
        strategy: str = STRATEGY_PENCIL,
    ) -> "ConjugateDirectionSet":
        """Package externally supplied direction rows (normalized here)."""
        D = np.asarray(raw_directions, dtype=float).copy()
        D /= np.linalg.norm(D, axis=1, keepdims=True)
        S = problem.P + sigma * np.eye(problem.n)
        B = problem.A.T @ (rho.effective()[:, None] * problem.A)
        t1 = np.einsum("ki,ij,kj->k", D, S, D)
        t2 = np.einsum("ki,ij,kj->k", D, B, D)
        return cls(
            directions=D,
            t1=t1,
            t2=t2,
            fingerprint=data_fingerprint(problem.P, problem.A, sigma, rho.rho_base),
            strategy=strategy,
        )


@dataclass(frozen=True)
class ConjugacyReport:
    """Largest normalized off-diagonal cross terms of a direction set."""

    objective_residual: float  # against P + sigma*I
    penalty_residual: float  # against A' rho A
    combined_residual: float  # against the full operator
    tol: float
    passed: bool


def data_fingerprint(
    P: np.ndarray, A: np.ndarray, sigma: float, rho_base: np.ndarray
) -> str:
    """Content hash of (P, A, sigma, rho_base) at 12 significant digits."""
    h = hashlib.sha256()
    h.update(f"{P.shape[0]}x{A.shape[0]}".encode())
    for block in (np.ravel(P), np.ravel(A), np.array([sigma]), np.ravel(rho_base)):
        for value in block:
            h.update(f" {value:.12g}".encode())
    return h.hexdigest()


def rho_init(problem: QpProblem, rho_bar: float) -> AugmentationMatrix:
    """Standard diagonal initialization from a base penalty.

    Inequality rows get ``rho_bar``; equality rows (l == u exactly) get
    ``1e3 * rho_bar``.
    """
    if rho_bar <= 0.0:
        raise ValueError("rho_bar must be positive")
    base = np.where(problem.l == problem.u, EQUALITY_RHO_FACTOR * rho_bar, rho_bar)
    return AugmentationMatrix(base, 1.0)


def compute_offline(
    problem: QpProblem, sigma: float, seed_rho: AugmentationMatrix
) -> tuple[ConjugateDirectionSet, AugmentationMatrix]:
    """Produce the cached direction set and its augmentation diagonal.

    The diagonal is taken from the seed; directions are pencil
    eigenvectors of ``(P + sigma*I, A' rho A)``, conjugate for both
    terms at every scale. If A lacks full column rank the pencil is
    singular and the combined-matrix fallback is used instead, with a
    :class:`ScaleFragileWarning`.
    """
    if sigma <= 0.0:
        raise ValueError("sigma must be positive")
    rho_off = AugmentationMatrix(seed_rho.effective(), 1.0)
    S = problem.P + sigma * np.eye(problem.n)
    B = problem.A.T @ (rho_off.rho_base[:, None] * problem.A)

    try:
        pairs = generalized_eig(S, B)
        strategy = STRATEGY_PENCIL
    except NotPositiveDefiniteError:
        warnings.warn(
            "constraint matrix lacks full column rank; falling back to "
            "combined-matrix directions (valid at scale 1 only)",
            ScaleFragileWarning,
        )
        pairs = symmetric_eig(S + B, relative_polish=True)
        strategy = STRATEGY_COMBINED

    D = np.vstack([p.vector for p in pairs])
    t1 = np.einsum("ki,ij,kj->k", D, S, D)
    t2 = np.einsum("ki,ij,kj->k", D, B, D)
    dirs = ConjugateDirectionSet(
        directions=D,
        t1=t1,
        t2=t2,
        fingerprint=data_fingerprint(problem.P, problem.A, sigma, rho_off.rho_base),
        strategy=strategy,
    )
    return dirs, rho_off


def conjugacy_check(
    dirs: ConjugateDirectionSet,
    problem: QpProblem,
    sigma: float,
    rho: AugmentationMatrix,
    tol: float,
) -> ConjugacyReport:
    """Largest normalized cross terms of the set against (P+sigma*I, A' rho A).

    The objective term is normalized by sqrt(t1_p * t1_q), the penalty
    term by 1 + sqrt(t2_p * t2_q), and the combined term by the cached
    forms at the given scale. Passing means all three stay at or below
    ``tol``.
    """
    D = dirs.directions
    n = dirs.n
    S = problem.P + sigma * np.eye(problem.n)
    B_eff = problem.A.T @ (rho.effective()[:, None] * problem.A)
    G1 = D @ S @ D.T
    G2 = D @ B_eff @ D.T
    kappa = dirs.t1 + rho.scale * dirs.t2

    off = ~np.eye(n, dtype=bool)
    norm1 = np.sqrt(np.outer(dirs.t1, dirs.t1))
    norm2 = 1.0 + np.sqrt(np.outer(dirs.t2, dirs.t2))
    norm_c = np.sqrt(np.outer(kappa, kappa))
    objective = float(np.max(np.abs(G1[off]) / norm1[off])) if n > 1 else 0.0
    penalty = float(np.max(np.abs(G2[off]) / norm2[off])) if n > 1 else 0.0
    combined = float(np.max(np.abs((G1 + G2)[off]) / norm_c[off])) if n > 1 else 0.0
    return ConjugacyReport(
        objective_residual=objective,
        penalty_residual=penalty,
        combined_residual=combined,
        tol=tol,
        passed=objective <= tol and penalty <= tol and combined <= tol,
    )


def rescale(
    dirs: ConjugateDirectionSet, rho: AugmentationMatrix, factor: float
) -> AugmentationMatrix:
    """Multiply the running scale; the direction set needs no rebuild.

    Both split forms are homogeneous in the scale, so pencil-strategy
    sets remain exactly conjugate and the cached ``t1``/``t2`` stay
    valid. Combined-strategy sets lose exact conjugacy and rely on the
    polish step instead.
    """
    del dirs  # valid across rescales by construction; kept in the signature
    return rho.rescaled(factor)
