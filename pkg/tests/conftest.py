"""Shared generators and seeded random sources."""

import numpy as np
import pytest

from src.calculus.core_space import Measure, StateSpace, build_chain, build_weighted_grid, random_chain
from src.calculus.polynomials import parse_univariate
from src.calculus.semigroup import factorize


@pytest.fixture
def two_point():
    """Symmetric two-point chain, m = (1/2, 1/2)."""
    return build_chain(StateSpace(n=2), Measure(weights=[0.5, 0.5]), [[-1.0, 1.0], [1.0, -1.0]])


@pytest.fixture
def path3():
    """Three-point path with unit rates and uniform m."""
    rates = [[-1.0, 1.0, 0.0], [1.0, -2.0, 1.0], [0.0, 1.0, -1.0]]
    return build_chain(StateSpace(n=3), Measure(weights=[1.0, 1.0, 1.0]), rates)


@pytest.fixture(scope="session")
def ou_grid():
    """Ornstein-Uhlenbeck grid on [-5, 5] with 201 nodes (h = 0.05)."""
    return build_weighted_grid(-5.0, 5.0, 201, parse_univariate("0.5*x^2"))


@pytest.fixture(scope="session")
def ou_factorization(ou_grid):
    return factorize(ou_grid)


@pytest.fixture
def rng():
    return np.random.default_rng(42)


@pytest.fixture
def random_chains():
    """Twenty seeded reversible chains with at most 12 states."""
    source = np.random.default_rng(7)
    return [random_chain(int(source.integers(3, 13)), source) for _ in range(20)]
