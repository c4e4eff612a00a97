"""Shared test fixtures: reference problem data and random instance factories."""

from __future__ import annotations

import numpy as np

from cdqp import QpProblem, validate

# Bundled 4-variable dense problem (same data as data/small_dense.qp).
SMALL_P = np.array(
    [
        [3.0, 1.0, 3.0, 2.0],
        [1.0, 1.0, 2.0, 1.0],
        [3.0, 2.0, 8.0, 4.0],
        [2.0, 1.0, 4.0, 3.0],
    ]
)
SMALL_Q = np.array([1.0, 1.0, 1.0, 1.0])
SMALL_A = np.eye(4)
SMALL_L = np.array([-2.0, -1.0, -3.0, -4.0])
SMALL_U = np.array([10.0, 1.0, 3.0, 0.0])

# Independently derived optimum (active-set enumeration; constraint 1 at its
# lower bound, stationarity solved exactly over the rationals).
SMALL_X_STAR = np.array([-1.0 / 13.0, -1.0, 5.0 / 13.0, -6.0 / 13.0])
SMALL_Y_STAR = np.array([0.0, -3.0 / 13.0, 0.0, 0.0])
SMALL_OBJ_STAR = -9.0 / 13.0


def small_problem() -> QpProblem:
    return validate(QpProblem(P=SMALL_P, q=SMALL_Q, A=SMALL_A, l=SMALL_L, u=SMALL_U))


def random_psd(rng: np.random.Generator, n: int, rank: int | None = None) -> np.ndarray:
    """Random positive semidefinite matrix with moderate spectrum."""
    rank = n if rank is None else rank
    G = rng.normal(size=(rank, n))
    return G.T @ G


def random_full_column_rank(rng: np.random.Generator, m: int, n: int) -> np.ndarray:
    """Random m x n (m >= n) with smallest singular value at least 0.3."""
    assert m >= n
    while True:
        A = rng.normal(size=(m, n))
        if np.linalg.svd(A, compute_uv=False)[-1] >= 0.3:
            return A


def random_box_problem(
    rng: np.random.Generator,
    n: int,
    m: int,
    definite: bool = False,
    with_infinite: bool = False,
) -> QpProblem:
    """Random validated problem with a nonempty box."""
    P = random_psd(rng, n)
    if definite:
        P = P + 0.5 * np.eye(n)
    A = random_full_column_rank(rng, m, n) if m >= n else rng.normal(size=(m, n))
    q = rng.normal(size=n)
    center = rng.normal(size=m)
    width = rng.uniform(0.5, 2.0, size=m)
    l = center - width
    u = center + width
    if with_infinite:
        l = np.where(rng.random(m) < 0.3, -np.inf, l)
        u = np.where(rng.random(m) < 0.3, np.inf, u)
    return validate(QpProblem(P=P, q=q, A=A, l=l, u=u))
