"""
Jacobi-field bundles, the boundary determinant and the optimality verdict.

Each bundle holds ``n = 2 nq`` fields started at ``dx(0) = 0`` with unit
covector variations.  ``D(t)`` is the determinant of the matrix whose columns
are the fields' state parts ``(dq, dqdot)``; its first sign change after
``t_skip`` is the first conjugate time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .control import LegendreReport, legendre_check
from .errors import LagocError, LegendreViolation
from .hamiltonian import (
    costate_from_lagrangian,
    hamiltonian_blocks,
    reduced_variational_matrix,
    variational_costate_inverse,
)
from .lagrangian import jacobi_matrix
from .numerics import DenseTrajectory, IntegratorOptions, bisect, find_sign_change, integrate, signed_det

FORMULATIONS = ("hamiltonian", "lagrangian")
ASSUMPTIONS = "normal, corank-1 assumed"
BUNDLE_TOL = 1e-8


@dataclass
class JacobiBundle:
    formulation: str
    traj: DenseTrajectory  # stacked fields, column-major over the n fields
    nq: int
    t: np.ndarray = field(default_factory=lambda: np.empty(0))
    D: np.ndarray = field(default_factory=lambda: np.empty(0))

    @property
    def n(self) -> int:
        return 2 * self.nq

    @property
    def T(self) -> float:
        return self.traj.t_end

    def fields_at(self, t) -> np.ndarray:
        """``(4 nq, n)`` matrix of field values at time ``t``."""
        return self.traj(t).reshape(4 * self.nq, self.n)

    def field(self, i: int, t) -> np.ndarray:
        return self.fields_at(t)[:, i]

    def det(self, t) -> float:
        return signed_det(self.fields_at(t)[:2 * self.nq, :])


def _bundle_rhs(p, extremal, formulation):
    nq = p.nq
    n4, n = 4 * nq, 2 * nq

    def rhs(t, y):
        s, u = extremal.at(t)
        if formulation == "hamiltonian":
            M = reduced_variational_matrix(p, costate_from_lagrangian(p, s, u), u)
        else:
            M = jacobi_matrix(p, s, u)
        return (M @ y.reshape(n4, n)).ravel()

    return rhs


def initial_fields(p, extremal, formulation: str, scale: float = 1.0) -> np.ndarray:
    """Initial ``(4 nq, n)`` field matrix.

    Hamiltonian fields start at ``(0, e_i)``; Lagrangian fields are the same
    covector seeds pulled back through the linearised costate identification.
    """
    nq = p.nq
    n4, n = 4 * nq, 2 * nq
    seeds = np.zeros((n4, n))
    seeds[2 * nq:, :] = scale * np.eye(n)
    if formulation == "hamiltonian":
        return seeds
    s, u = extremal.at(0.0)
    return np.column_stack([variational_costate_inverse(p, s, u, seeds[:, i]) for i in range(n)])


def propagate_bundle(p, extremal, formulation: str = "hamiltonian", tol: float = BUNDLE_TOL,
                     scale: float = 1.0, check_legendre: bool = True) -> JacobiBundle:
    """Integrate the ``2 nq`` Jacobi fields along ``extremal``.

    Raises
    ------
    LegendreViolation
        If the strong Legendre condition fails along the extremal.
    """
    if formulation not in FORMULATIONS:
        raise ValueError(f"formulation must be one of {FORMULATIONS}")
    if check_legendre:
        report = legendre_check(p, extremal)
        if report.verdict != "strong":
            raise LegendreViolation(f"strong Legendre condition fails (min eigenvalue {report.overall_min:.3e})")
    Y0 = initial_fields(p, extremal, formulation, scale)
    opts = IntegratorOptions("DP45", tol, tol)
    traj = integrate(_bundle_rhs(p, extremal, formulation), Y0.ravel(), (0.0, extremal.T), opts)
    return JacobiBundle(formulation, traj, p.nq)


def det_series(bundle: JacobiBundle, n_points: int = 2001):
    """``D(t)`` on a uniform grid of at least 1000 points."""
    t = np.linspace(0.0, bundle.T, max(int(n_points), 1000))
    vals = bundle.traj(t)
    n2 = 2 * bundle.nq
    D = np.array([signed_det(v.reshape(4 * bundle.nq, bundle.n)[:n2, :]) for v in vals])
    bundle.t, bundle.D = t, D
    return t, D


@dataclass
class ConjugateSearch:
    formulation: str
    t_c: Optional[float]
    bracket: Optional[tuple]
    tol_t: float
    t_skip: float
    near_zeros: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "formulation": self.formulation,
            "t_c": self.t_c,
            "bracket": list(self.bracket) if self.bracket else None,
            "tol_t": self.tol_t,
            "t_skip": self.t_skip,
            "near_zeros": self.near_zeros,
        }


def default_t_skip(bundle: JacobiBundle) -> float:
    return max(1e-3 * bundle.T, 10 * bundle.traj.first_step)


def first_conjugate_time(bundle: JacobiBundle, t_skip: Optional[float] = None, n_scan: int = 2000,
                         tol_t: float = 1e-8) -> ConjugateSearch:
    """Earliest sign change of ``D`` on ``[t_skip, T]``, refined by bisection.

    Touching zeros (``|D| < 1e-12 max|D|`` without a sign change) are
    reported in ``near_zeros`` and never returned as conjugate times.
    """
    if t_skip is None:
        t_skip = default_t_skip(bundle)
    T = bundle.T
    if t_skip >= T:
        return ConjugateSearch(bundle.formulation, None, None, tol_t, t_skip)
    bracket = find_sign_change(bundle.det, (t_skip, T), n_scan)
    ts = np.linspace(t_skip, T, n_scan)
    Ds = np.array([bundle.det(t) for t in ts])
    scale = np.max(np.abs(Ds)) if Ds.size else 0.0
    limit = bracket[0] if bracket else T
    near = []
    for i in range(1, ts.size - 1):
        if ts[i] > limit:
            break
        if abs(Ds[i]) < 1e-12 * scale and Ds[i - 1] * Ds[i + 1] > 0:
            near.append(float(ts[i]))
    if bracket is None:
        return ConjugateSearch(bundle.formulation, None, None, tol_t, t_skip, near)
    t_c = bisect(bundle.det, bracket, tol_t)
    return ConjugateSearch(bundle.formulation, float(t_c), bracket, tol_t, t_skip, near)


@dataclass
class ConjugateReport:
    t_c: Optional[float]
    method: str
    searches: dict
    legendre: LegendreReport
    verdict: str
    T: float
    flags: list = field(default_factory=list)
    t: np.ndarray = field(default_factory=lambda: np.empty(0))
    D: dict = field(default_factory=dict)
    assumptions: str = ASSUMPTIONS

    def to_dict(self, include_samples: bool = False) -> dict:
        out = {
            "t_c": self.t_c,
            "method": self.method,
            "T": self.T,
            "verdict": self.verdict,
            "flags": self.flags,
            "assumptions": self.assumptions,
            "formulations": {k: v.to_dict() for k, v in self.searches.items()},
            "legendre": self.legendre.to_dict() if self.legendre else None,
        }
        if not include_samples and out["legendre"]:
            out["legendre"].pop("grid")
            out["legendre"].pop("min_eig")
        if include_samples:
            out["D"] = {"t": self.t.tolist(), **{k: v.tolist() for k, v in self.D.items()}}
        return out


def optimality_verdict(p, extremal, t_skip: Optional[float] = None, n_scan: int = 2000,
                       tol_t: float = 1e-8, bundle_tol: float = BUNDLE_TOL,
                       n_points: int = 2001) -> ConjugateReport:
    """Legendre check plus first conjugate time in both formulations."""
    T = extremal.T
    legendre = legendre_check(p, extremal)
    flags = []
    if legendre.verdict != "strong":
        flags.append(f"legendre-{legendre.verdict}: conjugate-time analysis refused")
        return ConjugateReport(None, "hamiltonian", {}, legendre, "inconclusive", T, flags)

    searches, series = {}, {}
    t_grid = np.empty(0)
    for form in FORMULATIONS:
        try:
            bundle = propagate_bundle(p, extremal, form, bundle_tol, check_legendre=False)
        except LagocError as exc:
            flags.append(f"{form}: bundle propagation failed ({exc})")
            return ConjugateReport(None, "hamiltonian", searches, legendre, "inconclusive", T, flags)
        t_grid, series[form] = det_series(bundle, n_points)
        searches[form] = first_conjugate_time(bundle, t_skip, n_scan, tol_t)
        for tz in searches[form].near_zeros:
            flags.append(f"{form}: near-zero touch of D at t={tz:.6g}")

    th, tl = searches["hamiltonian"].t_c, searches["lagrangian"].t_c
    t_c = th
    if (th is None) != (tl is None) or (th is not None and abs(th - tl) > 10 * tol_t):
        flags.append("coincidence-failure: formulations disagree on the conjugate time")
        verdict = "inconclusive"
    elif t_c is None:
        verdict = "optimal-on-[0,T]"
    elif abs(t_c - T) <= tol_t:
        flags.append("conjugate time coincides with the horizon")
        verdict = "inconclusive"
    elif t_c < T:
        verdict = "not-optimal"
    else:
        verdict = "optimal-on-[0,T]"
    return ConjugateReport(t_c, "hamiltonian", searches, legendre, verdict, T, flags, t_grid, series)


def field_residual(p, extremal, bundle: JacobiBundle, times) -> float:
    """Sup-norm residual of the full variational system with ``du`` from the linearised optimality equation.

    Hamiltonian bundles only; field derivatives are taken from the dense output.
    """
    nq = p.nq
    n2 = 2 * nq
    worst = 0.0
    for t in times:
        s, u = extremal.at(t)
        pt = costate_from_lagrangian(p, s, u)
        Hzz, Hzu, Huu = hamiltonian_blocks(p, pt, u)
        Z = bundle.fields_at(t)
        Zdot = bundle.traj.derivative(t).reshape(4 * nq, 2 * nq)
        du = -np.linalg.solve(Huu, Hzu.T @ Z)
        grad = Hzz @ Z + Hzu @ du
        res_x = Zdot[:n2] - grad[n2:]
        res_l = Zdot[n2:] + grad[:n2]
        worst = max(worst, float(np.max(np.abs(res_x))), float(np.max(np.abs(res_l))))
    return worst

