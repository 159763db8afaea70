import numpy as np
import pytest

from sublevel import PhaseTimer
from sublevel.problems import SyntheticSpec, objective_from_spec


@pytest.fixture(autouse=True)
def reset_profiler():
    """
    Clear the phase profiler before each test so timings never leak between tests.
    """
    PhaseTimer.reset()
    yield


@pytest.fixture
def logistic():
    """Small well-conditioned logistic regression problem."""
    return objective_from_spec("logistic", SyntheticSpec(m=200, n=20, seed=3), reg=1e-3)


@pytest.fixture
def loglinear():
    return objective_from_spec("loglinear", SyntheticSpec(m=300, n=20, distribution="loglinear", seed=5))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
