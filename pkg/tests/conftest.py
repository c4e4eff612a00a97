import numpy as np
import pytest

from cdqp import compute_offline, rho_init
from helpers import small_problem


@pytest.fixture(scope="session")
def small():
    return small_problem()


@pytest.fixture(scope="session")
def small_offline(small):
    """Direction cache for the bundled problem at sigma=1e-4, rho_bar=0.1."""
    return compute_offline(small, 1e-4, rho_init(small, 0.1))


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
