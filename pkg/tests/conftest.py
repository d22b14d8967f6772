"""Shared fixtures and randomized-walk strategies for the test suite."""

import time

import numpy as np
import pytest

from qwgeom.model import RandomWalk, load_fixture

#: wall-clock start of the test session, for the runtime budget check
SESSION_START = time.monotonic()


@pytest.fixture(scope="session")
def ex1():
    return load_fixture("EX1")[0]


@pytest.fixture(scope="session")
def ex2():
    return load_fixture("EX2")[0]


@pytest.fixture(scope="session")
def ex3():
    return load_fixture("EX3")


@pytest.fixture(scope="session")
def ex4():
    return load_fixture("EX4")


@pytest.fixture(scope="session")
def ex5():
    return load_fixture("EX5")


def random_walk(rng: np.random.Generator, min_north: float = 1e-3) -> RandomWalk:
    """A random valid walk whose rows sum to one and whose east/northeast/
    north interior mass is at least ``min_north``."""
    while True:
        interior = rng.dirichlet(np.ones(9)).reshape(3, 3)
        if interior[2, 1] + interior[2, 2] + interior[1, 2] < min_north:
            continue
        up = interior[:, 2].sum()
        right = interior[2, :].sum()
        horizontal = rng.dirichlet(np.ones(3)) * (1.0 - up)
        vertical = rng.dirichlet(np.ones(3)) * (1.0 - right)
        if horizontal[2] + vertical[2] + interior[2, 2] > 1.0:
            continue  # the origin row must also be a distribution
        return RandomWalk(interior, horizontal, vertical)
