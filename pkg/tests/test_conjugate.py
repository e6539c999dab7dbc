import numpy as np
import pytest
from oracles import beam_conjugate_time, concave_cost_problem, lq_conjugate_time, random_indefinite_lq

from lagoc.conjugate import (
    det_series,
    field_residual,
    first_conjugate_time,
    optimality_verdict,
    propagate_bundle,
)
from lagoc.errors import LegendreViolation
from lagoc.hamiltonian import variational_costate
from lagoc.lq import to_generic
from lagoc.shooting import solve

BEAM_TC = beam_conjugate_time()


@pytest.fixture(scope="module")
def di_bundles(solved):
    p, ext = solved("double_integrator")
    return p, ext, {f: propagate_bundle(p, ext, f) for f in ("hamiltonian", "lagrangian")}


class TestDoubleIntegrator:
    def test_closed_form_fields(self, di_bundles):
        _, _, bundles = di_bundles
        b = bundles["hamiltonian"]
        for t in (0.25, 0.5, 1.0):
            F = b.fields_at(t)
            # columns: seeds e1 (dlambda_q) and e2 (dlambda_v); rows dq, dqdot
            assert F[0, 0] == pytest.approx(-t ** 3 / 6, abs=1e-9)
            assert F[0, 1] == pytest.approx(t ** 2 / 2, abs=1e-9)
            assert F[1, 1] == pytest.approx(t, abs=1e-9)

    @pytest.mark.parametrize("form", ["hamiltonian", "lagrangian"])
    def test_determinant(self, di_bundles, form):
        b = di_bundles[2][form]
        assert b.det(1.0) == pytest.approx(1 / 12, abs=1e-8)
        assert b.det(0.0) == 0.0
        t, D = det_series(b)
        assert t.size >= 1000
        np.testing.assert_allclose(D, t ** 4 / 12, atol=1e-8)
        assert first_conjugate_time(b).t_c is None

    def test_seed_scaling(self, di_bundles):
        p, ext, bundles = di_bundles
        scaled = propagate_bundle(p, ext, "hamiltonian", scale=3.0)
        for t in (0.3, 0.9):
            assert scaled.det(t) == pytest.approx(9.0 * bundles["hamiltonian"].det(t), rel=1e-8)

    def test_field_residual(self, di_bundles):
        p, ext, bundles = di_bundles
        assert field_residual(p, ext, bundles["hamiltonian"], np.linspace(0, 1, 51)) <= 1e-7

    def test_verdict(self, verdicts):
        r = verdicts("double_integrator")
        assert r.verdict == "optimal-on-[0,T]"
        assert r.t_c is None
        assert r.assumptions == "normal, corank-1 assumed"


class TestBeam:
    @pytest.mark.parametrize("form", ["hamiltonian", "lagrangian"])
    def test_conjugate_time(self, verdicts, form):
        r = verdicts("min_effort_beam")
        assert abs(r.searches[form].t_c - BEAM_TC) <= 1e-4
        assert r.verdict == "not-optimal"

    def test_formulations_coincide(self, verdicts):
        s = verdicts("min_effort_beam").searches
        assert abs(s["hamiltonian"].t_c - s["lagrangian"].t_c) <= 1e-7

    @pytest.mark.parametrize("form", ["hamiltonian", "lagrangian"])
    def test_det_closed_form(self, verdicts, form):
        # unit covector seeds give D(t) = (1 - cos(t) cosh(t)) / 2 exactly
        r = verdicts("min_effort_beam")
        g = 0.5 * (1.0 - np.cos(r.t) * np.cosh(r.t))
        np.testing.assert_allclose(r.D[form], g, rtol=1e-6, atol=1e-8 * np.abs(g).max())
        mask = (r.t > 0.1) & (np.abs(r.t - BEAM_TC) > 1e-3)
        assert np.all(np.sign(r.D[form][mask]) == np.sign(g[mask]))

    def test_short_horizon_optimal(self, verdicts):
        assert verdicts("min_effort_beam", 4.0).verdict == "optimal-on-[0,T]"

    def test_medium_horizon_not_optimal(self, verdicts):
        r = verdicts("min_effort_beam", 5.5)
        assert r.verdict == "not-optimal"
        assert r.t_c == pytest.approx(BEAM_TC, abs=1e-4)

    def test_report_serialises(self, verdicts):
        d = verdicts("min_effort_beam").to_dict(include_samples=True)
        assert set(d["formulations"]) == {"hamiltonian", "lagrangian"}
        assert len(d["D"]["t"]) == len(d["D"]["hamiltonian"])

    def test_no_spurious_early_zero(self, verdicts):
        r = verdicts("min_effort_beam")
        t_skip = r.searches["hamiltonian"].t_skip
        early = (r.t > t_skip) & (r.t < 4.0)
        assert np.all(r.D["hamiltonian"][early] > 0)


class TestLagrangianBundleTransform:
    def test_lq_bundles_related_pointwise(self, rng):
        lq = random_indefinite_lq(rng, 2, T=2.0)
        p = to_generic(lq)
        ext = solve(p)
        bh = propagate_bundle(p, ext, "hamiltonian")
        bl = propagate_bundle(p, ext, "lagrangian")
        for t in np.linspace(0, p.T, 9):
            s, u = ext.at(t)
            Fl = bl.fields_at(t)
            mapped = np.column_stack([variational_costate(p, s, u, Fl[:, i]) for i in range(Fl.shape[1])])
            assert np.max(np.abs(mapped - bh.fields_at(t))) <= 1e-8 * max(1.0, np.abs(bh.fields_at(t)).max())


class TestVerdicts:
    def test_pendulum(self, verdicts):
        r = verdicts("forced_pendulum")
        assert r.verdict == "optimal-on-[0,T]"
        assert not any("coincidence" in f for f in r.flags)

    def test_legendre_violation_refused(self):
        p = concave_cost_problem()
        ext = solve(p)
        with pytest.raises(LegendreViolation):
            propagate_bundle(p, ext)
        r = optimality_verdict(p, ext)
        assert r.verdict == "inconclusive"
        assert r.legendre.verdict == "violated"

    def test_horizon_at_conjugate_time_inconclusive(self, solved):
        # horizon 1e-5 past t_c, inside the time tolerance
        p, _ = solved("min_effort_beam")
        p = p.with_boundary(p.boundary.replace(T=BEAM_TC + 1e-5))
        r = optimality_verdict(p, solve(p), tol_t=1e-4)
        assert r.verdict == "inconclusive"
        assert any("coincides with the horizon" in f for f in r.flags)

    def test_random_lq_matches_oracle(self, rng):
        lq = random_indefinite_lq(rng, 1)
        tc = lq_conjugate_time(lq, 8.0)
        lq = lq.with_boundary(lq.boundary.replace(T=1.25 * tc))
        p = to_generic(lq)
        r = optimality_verdict(p, solve(p))
        assert r.t_c == pytest.approx(tc, abs=1e-6)

    def test_bad_formulation(self, solved):
        p, ext = solved("double_integrator")
        with pytest.raises(ValueError):
            propagate_bundle(p, ext, "symplectic")
