import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from oracles import concave_cost_problem

from lagoc.control import (
    control_sensitivity,
    eliminate_control,
    legendre_check,
    legendre_verdict,
    optimality_gradient,
)
from lagoc.errors import SingularHessian
from lagoc.hamiltonian import optimality_residual, tulczyjew_map
from lagoc.lagrangian import ExtendedPoint
from lagoc.lq import LQProblem, to_generic
from lagoc.problem import BoundaryData, DifferentiableMap, Dims, SecondOrderOCP
from lagoc.registry import double_integrator, forced_pendulum
from lagoc.shooting import solve


def quartic_effort():
    """``qddot = u`` with ``C = u^2/2 + u^4/4``."""
    z1, z11 = np.zeros(1), np.zeros((1, 1))
    cost = DifferentiableMap(
        fun=lambda q, v, u: float(0.5 * u @ u + 0.25 * np.sum(u ** 4)),
        grad=lambda q, v, u: (z1, z1, u + u ** 3),
        hess=lambda q, v, u: {"qq": z11, "qv": z11, "qu": z11, "vv": z11, "vu": z11,
                              "uu": np.diag(1 + 3 * u ** 2)},
        scalar=True,
    )
    p = double_integrator()
    return SecondOrderOCP(Dims(1, 1), cost, p.dynamics, p.boundary, "quartic")


def lq_2x2(R=((1.0, 0.0), (0.0, 2.0))):
    b = BoundaryData([0, 0], [0, 0], [1, -1], [0, 0], 2.0)
    return LQProblem(np.diag([1.0, 2.0]), np.eye(2) * 0.1, np.array(R), 0.2 * np.ones((2, 2)),
                     np.array([[0.0, 0.3], [-0.3, 0.0]]), np.array([[1.0, 0.5], [0.0, 1.0]]), b)


class TestEliminateControl:
    def test_double_integrator(self):
        u = eliminate_control(double_integrator(), ([0.0], [2.0]), ([0.0], [0.0]))
        assert u[0] == pytest.approx(2.0)

    def test_quartic_zero_root(self):
        u = eliminate_control(quartic_effort(), ([0.0], [0.0]), ([0.0], [0.0]), [0.7])
        assert abs(u[0]) <= 1e-12

    def test_quartic_nonzero_root(self):
        # kappa = u + u^3 at u = 1
        u = eliminate_control(quartic_effort(), ([0.0], [2.0]), ([0.0], [0.0]), [0.0])
        assert u[0] == pytest.approx(1.0, abs=1e-12)

    @given(st.lists(st.floats(-10, 10), min_size=4, max_size=4))
    @settings(max_examples=30, deadline=None)
    def test_lq_one_newton_step(self, vals):
        lq = lq_2x2()
        p = to_generic(lq)
        kappa = np.array(vals[:2])
        u0 = np.array(vals[2:])
        u = eliminate_control(p, (np.zeros(2), kappa), (np.zeros(2), np.zeros(2)), u0, max_iter=1)
        np.testing.assert_allclose(u, np.linalg.solve(lq.R, lq.B.T @ kappa), atol=1e-10 * (1 + np.abs(kappa).max()))

    def test_residual_through_tulczyjew(self, rng):
        p = forced_pendulum()
        for _ in range(50):
            q, k, v, w = (rng.standard_normal(1) for _ in range(4))
            u = eliminate_control(p, (q, k), (v, w))
            phase, uu = tulczyjew_map(ExtendedPoint(q, k, v, w, u))
            assert np.max(np.abs(optimality_residual(p, phase, uu))) <= 1e-12
            assert np.max(np.abs(optimality_gradient(p, q, k, v, u))) <= 1e-12

    def test_singular_hessian(self):
        p = double_integrator()
        zero = {k: np.zeros((1, 1)) for k in ("qq", "qv", "qu", "vv", "vu", "uu")}
        flat = DifferentiableMap(fun=lambda q, v, u: 0.0, grad=lambda q, v, u: (np.zeros(1),) * 3,
                                 hess=lambda q, v, u: zero, scalar=True)
        bad = SecondOrderOCP(Dims(1, 1), flat, p.dynamics, p.boundary)
        with pytest.raises(SingularHessian):
            eliminate_control(bad, ([0.0], [1.0]), ([0.0], [0.0]))


class TestSensitivity:
    def test_lq(self):
        lq = lq_2x2()
        p = to_generic(lq)
        du_dy, du_dyd = control_sensitivity(p, np.ones(2), np.ones(2), np.ones(2), np.zeros(2))
        np.testing.assert_allclose(du_dy[:, 2:], np.linalg.solve(lq.R, lq.B.T), atol=1e-14)
        np.testing.assert_allclose(du_dy[:, :2], 0.0, atol=1e-14)
        np.testing.assert_allclose(du_dyd, 0.0, atol=1e-14)

    def test_double_integrator(self):
        du_dy, _ = control_sensitivity(double_integrator(), [0.0], [1.0], [0.0], [1.0])
        np.testing.assert_allclose(du_dy, [[0.0, 1.0]])

    def test_against_finite_differences(self, rng):
        p = quartic_effort()
        pend = forced_pendulum()
        for prob in (p, pend):
            q, k, v = rng.standard_normal(1), rng.standard_normal(1), rng.standard_normal(1)
            u = eliminate_control(prob, (q, k), (v, np.zeros(1)))
            du_dy, du_dyd = control_sensitivity(prob, q, k, v, u)
            h = 1e-6
            fd = []
            for base, idx in ((q, 0), (k, 1)):
                cols = []
                for sgn in (1, -1):
                    args = [q.copy(), k.copy()]
                    args[idx] = base + sgn * h
                    cols.append(eliminate_control(prob, tuple(args), (v, np.zeros(1)), u))
                fd.append((cols[0] - cols[1]) / (2 * h))
            fd = np.column_stack(fd)
            assert np.max(np.abs(fd - du_dy)) / max(1.0, np.max(np.abs(fd))) <= 1e-6
            up = eliminate_control(prob, (q, k), (v + h, np.zeros(1)), u)
            um = eliminate_control(prob, (q, k), (v - h, np.zeros(1)), u)
            assert abs((up - um)[0] / (2 * h) - du_dyd[0, 0]) <= 1e-6


class TestLegendre:
    def test_lq_diag_R(self):
        lq = lq_2x2(R=((1.0, 0.0), (0.0, 2.0)))
        p = to_generic(lq)
        report = legendre_check(p, solve(p), n_samples=101)
        np.testing.assert_allclose(report.min_eig, 1.0, atol=1e-14)
        assert report.verdict == "strong"

    def test_double_integrator(self, solved):
        p, ext = solved("double_integrator")
        report = legendre_check(p, ext)
        np.testing.assert_allclose(report.min_eig, 1.0, atol=1e-14)
        assert report.to_dict()["verdict"] == "strong"

    def test_concave_cost_violated(self):
        p = concave_cost_problem()
        report = legendre_check(p, solve(p))
        assert report.overall_min == pytest.approx(-1.0)
        assert report.verdict == "violated"

    def test_verdict_thresholds(self):
        assert legendre_verdict(2e-9) == "strong"
        assert legendre_verdict(0.0) == "weak-only"
        assert legendre_verdict(-2e-9) == "violated"

    @pytest.mark.parametrize("n", [11, 101, 1001])
    def test_grid_refinement_keeps_verdict(self, solved, n):
        p, ext = solved("forced_pendulum")
        assert legendre_check(p, ext, n_samples=n).verdict == "strong"
