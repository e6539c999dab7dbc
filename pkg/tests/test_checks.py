import numpy as np
import pytest
from test_lagrangian import random_lq

from lagoc.checks import conservation, derivative_suite, flow_equivalence, lq_conjugacy, run_all, tulczyjew_suite
from lagoc.lq import to_generic
from lagoc.registry import REGISTRY, get_problem


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_static_suites_pass(name):
    p = get_problem(name)
    assert derivative_suite(p, n_points=20).passed
    assert tulczyjew_suite(p, n_points=200).passed


@pytest.mark.parametrize("name", sorted(REGISTRY))
def test_trajectory_suites_pass(solved, name):
    p, ext = solved(name)
    assert flow_equivalence(p, ext).passed
    res = conservation(p, ext)
    assert res.passed, res.details


def test_lq_conjugacy_with_embedding(rng):
    lq = random_lq(rng)
    res = lq_conjugacy(lq, to_generic(lq))
    assert res.passed
    assert set(res.details) >= {"conjugacy_error", "round_trip_error", "el_self_coincidence", "ham_self_coincidence"}


def test_broken_derivative_detected():
    p = get_problem("forced_pendulum")
    broken_grad = lambda q, v, u: (np.diag(-2 * np.cos(q)), np.zeros((1, 1)), np.eye(1))  # noqa: E731
    dyn = type(p.dynamics)(p.dynamics.fun, broken_grad, p.dynamics.hess, p.dynamics.hess_weighted)
    bad = type(p)(p.dims, p.cost, dyn, p.boundary)
    res = derivative_suite(bad, n_points=5)
    assert not res.passed
    assert res.details["blocks"]["dynamics.q"] > 0.1


def test_run_all_without_extremal():
    out = run_all(get_problem("double_integrator"))
    assert set(out) == {"derivatives", "tulczyjew"}
    assert all(r.to_dict()["passed"] for r in out.values())
