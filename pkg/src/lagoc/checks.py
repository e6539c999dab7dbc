"""
Property suites shared by the ``check`` command and the test-suite.

Each suite returns a :class:`PropertyResult` holding the worst error seen
and the tolerance it was judged against.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .hamiltonian import (
    costate_from_lagrangian,
    eval_H,
    integrate_reduced,
    reduced_variational_matrix,
    tulczyjew_map,
)
from .lagrangian import ExtendedPoint, energy, eval_L, jacobi_matrix
from .lq import (
    LQProblem,
    assemble_el_system,
    assemble_hamiltonian_system,
    lq_inverse_transform,
    lq_transform,
    transform_matrix,
)
from .numerics import IntegratorOptions
from .problem import check_derivatives


@dataclass
class PropertyResult:
    name: str
    passed: bool
    max_error: float
    tol: float
    details: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"passed": bool(self.passed), "max_error": float(self.max_error), "tol": self.tol, **self.details}


def _result(name, err, tol, **details) -> PropertyResult:
    err = float(err)
    return PropertyResult(name, bool(np.isfinite(err) and err <= tol), err, tol, details)


def derivative_suite(p, n_points: int = 100, tol: float = 1e-6, seed: int = 0, scale: float = 1.0) -> PropertyResult:
    """Every analytic block of cost and dynamics against central differences."""
    rng = np.random.default_rng(seed)
    worst: dict = {}
    for _ in range(n_points):
        point = (scale * rng.standard_normal(p.nq), scale * rng.standard_normal(p.nq),
                 scale * rng.standard_normal(p.m))
        for label, g in (("cost", p.cost), ("dynamics", p.dynamics)):
            for block, err in check_derivatives(g, point).items():
                key = f"{label}.{block}"
                worst[key] = max(worst.get(key, 0.0), float(err))
    overall = max(worst.values()) if worst else 0.0
    return _result("derivatives", overall, tol, blocks=worst, n_points=n_points)


def random_extended_point(rng, nq: int, m: int, scale: float = 1.0) -> ExtendedPoint:
    draw = lambda k: scale * rng.standard_normal(k)  # noqa: E731
    return ExtendedPoint(draw(nq), draw(nq), draw(nq), draw(nq), draw(m))


def tulczyjew_suite(p, n_points: int = 1000, tol: float = 1e-12, seed: int = 0) -> PropertyResult:
    """``|L(pt) - H(alpha(pt))| / (1 + |H|)`` on random extended points."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_points):
        pt = random_extended_point(rng, p.nq, p.m)
        phase, u = tulczyjew_map(pt)
        H = eval_H(p, phase, u)
        worst = max(worst, abs(eval_L(p, pt) - H) / (1.0 + abs(H)))
    return _result("tulczyjew", worst, tol, n_points=n_points)


def _identified_path(p, extremal, n):
    t, states, controls = extremal.sample(n)
    Z = np.array([costate_from_lagrangian(p, s, u).stacked() for s, u in zip(states, controls)])
    return t, states, controls, Z


def flow_equivalence(p, extremal, tol: float = 1e-6, n: int = 1001,
                     opts: IntegratorOptions = IntegratorOptions()) -> PropertyResult:
    """Reduced-Hamiltonian flow from the identified initial point against the Euler-Lagrange extremal."""
    t, _, controls, Z = _identified_path(p, extremal, n)
    ham = integrate_reduced(p, Z[0], (0.0, extremal.T), opts, u0=controls[0])
    err = float(np.max(np.abs(ham(t) - Z)))
    return _result("flow_equivalence", err, tol, n_samples=int(t.size))


def conservation(p, extremal, tol_h: float = 1e-8, tol_e: float = 1e-10, n: int = 1001) -> PropertyResult:
    """Drift of ``H`` along the extremal and the pointwise gap ``|E - H|``."""
    t, states, controls = extremal.sample(n)
    H = np.array([eval_H(p, costate_from_lagrangian(p, s, u), u) for s, u in zip(states, controls)])
    E = np.array([energy(p, s, u) for s, u in zip(states, controls)])
    drift = float(np.max(np.abs(H - H[0])))
    gap = float(np.max(np.abs(E - H)))
    passed = drift <= tol_h and gap <= tol_e
    return PropertyResult("conservation", passed, max(drift, gap), tol_h,
                          {"h_drift": drift, "energy_gap": gap, "tol_energy": tol_e})


def lq_conjugacy(lq: LQProblem, p=None, n_vectors: int = 100, tol: float = 1e-12, seed: int = 0) -> PropertyResult:
    """Matrix-algebra form of the coincidence of the two linear systems.

    Checks ``T M_el x = M_ham T x`` and the transform round-trip on random
    vectors; when the generic embedding ``p`` is given, also that its
    variational matrices reproduce the assembled systems.
    """
    rng = np.random.default_rng(seed)
    n4 = 4 * lq.nq
    Tm = transform_matrix(lq)
    Mel = assemble_el_system(lq).matrix
    Mham = assemble_hamiltonian_system(lq).matrix
    conj = trip = 0.0
    for _ in range(n_vectors):
        x = rng.standard_normal(n4)
        conj = max(conj, np.max(np.abs(Tm @ (Mel @ x) - Mham @ (Tm @ x))) / (1.0 + np.max(np.abs(Mham @ (Tm @ x)))))
        trip = max(trip, np.max(np.abs(lq_inverse_transform(lq, lq_transform(lq, x)) - x)) / (1.0 + np.max(np.abs(x))))
    details = {"conjugacy_error": float(conj), "round_trip_error": float(trip)}
    worst = max(conj, trip)
    if p is not None:
        s = rng.standard_normal(n4)
        u = np.linalg.solve(lq.R, lq.B.T @ s[2 * lq.nq:3 * lq.nq])
        scale_el = 1.0 + np.max(np.abs(Mel))
        scale_ham = 1.0 + np.max(np.abs(Mham))
        e_el = float(np.max(np.abs(jacobi_matrix(p, s, u) - Mel)) / scale_el)
        e_ham = float(np.max(np.abs(reduced_variational_matrix(p, costate_from_lagrangian(p, s, u), u) - Mham))
                      / scale_ham)
        details.update(el_self_coincidence=e_el, ham_self_coincidence=e_ham)
        worst = max(worst, e_el, e_ham)
    return _result("lq_conjugacy", worst, tol, **details)


def run_all(p, extremal=None, lq: Optional[LQProblem] = None, seed: int = 0) -> dict:
    """All applicable suites keyed by name; trajectory suites need ``extremal``."""
    out = {
        "derivatives": derivative_suite(p, seed=seed),
        "tulczyjew": tulczyjew_suite(p, seed=seed),
    }
    if extremal is not None:
        out["flow_equivalence"] = flow_equivalence(p, extremal)
        out["conservation"] = conservation(p, extremal)
    if lq is not None:
        out["lq_conjugacy"] = lq_conjugacy(lq, p, seed=seed)
    return out


