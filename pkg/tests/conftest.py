"""
Shared fixtures for the codebook design test suites
"""

import numpy as np
import pytest

from quantpower import SolverSettings, TrainingSet, sample_training_set


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False, help="run full-scale tests")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture
def settings():
    return SolverSettings()


@pytest.fixture(scope="module")
def rayleigh_small():
    """2000 unit-mean exponential samples on one band"""
    return sample_training_set(None, 1, 2000, 11)


@pytest.fixture(scope="module")
def rayleigh_band():
    """(g0, g1) arrays of 10^4 unit-mean exponential samples"""
    training = sample_training_set(None, 1, 10000, 3)
    return training.band(0)


@pytest.fixture
def two_point_band():
    """Two samples with g0 = 1 and g1 in {0.5, 8}"""
    return TrainingSet.from_arrays([1.0, 1.0], [0.5, 8.0])


def bisection_oracle(fn, low, high, iterations=200):
    """Plain bisection for a decreasing fn with fn(low) > 0 > fn(high)"""
    for _ in range(iterations):
        middle = 0.5 * (low + high)
        if fn(middle) > 0:
            low = middle
        else:
            high = middle
    return 0.5 * (low + high)


@pytest.fixture
def oracle():
    return bisection_oracle


@pytest.fixture
def rng():
    return np.random.default_rng(2024)
