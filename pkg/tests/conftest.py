import numpy as np
import pytest

from lagoc.conjugate import optimality_verdict
from lagoc.registry import get_problem
from lagoc.shooting import solve

DEMO = ("double_integrator", "min_effort_beam", "forced_pendulum")


@pytest.fixture(scope="session")
def solved():
    """Solved extremals of the demo problems at their default horizons, keyed by name."""
    cache = {}

    def get(name, T=None):
        key = (name, T)
        if key not in cache:
            p = get_problem(name)
            if T is not None:
                p = get_problem(name, p.boundary.replace(T=T))
            cache[key] = (p, solve(p))
        return cache[key]

    return get


@pytest.fixture(scope="session")
def verdicts(solved):
    cache = {}

    def get(name, T=None):
        key = (name, T)
        if key not in cache:
            p, ext = solved(name, T)
            cache[key] = optimality_verdict(p, ext)
        return cache[key]

    return get


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
