"""Control elimination, control sensitivity and Legendre checks."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ControlEliminationError, SingularHessian

STRONG_MARGIN = 1e-9


def _solve_uu(Luu, rhs):
    # 1-norm condition estimate; cheaper than the SVD for the tiny blocks here
    try:
        inv = np.linalg.inv(Luu)
        cond = np.linalg.norm(Luu, 1) * np.linalg.norm(inv, 1)
    except np.linalg.LinAlgError:
        cond = np.inf
    if not np.isfinite(cond) or cond > 1e14:
        raise SingularHessian(f"control Hessian is singular (cond={cond:.3e})")
    return inv @ rhs


def optimality_gradient(p, q, kappa, v, u) -> np.ndarray:
    """``dL/du = f_u^T kappa - C_u`` for the new control Lagrangian."""
    _, _, Cu = p.cost.first(q, v, u)
    _, _, fu = p.dynamics.first(q, v, u)
    return fu.T @ kappa - Cu


def eliminate_control(p, y, ydot, u_init=None, tol: float = 1e-12, max_iter: int = 50) -> np.ndarray:
    """Solve ``dL/du (y, ydot, u) = 0`` for ``u`` by Newton's method.

    ``y = (q, kappa)`` and ``ydot = (qdot, kappadot)``; only ``q``, ``kappa``
    and ``qdot`` enter.  Converged when the residual's infinity norm is at
    most ``tol``, or when the Newton update stalls at round-off level.

    Raises
    ------
    SingularHessian
        ``L_uu`` cannot be inverted.
    ControlEliminationError
        ``max_iter`` iterations without convergence.
    """
    q, kappa = (np.asarray(a, dtype=float) for a in y)
    v = np.asarray(ydot[0], dtype=float)
    u = np.zeros(p.m) if u_init is None else np.array(u_init, dtype=float)
    for _ in range(max_iter + 1):
        jet = p.jet(q, v, u, kappa)
        r = jet.fu.T @ kappa - jet.Cu
        if np.max(np.abs(r)) <= tol:
            return u
        du = _solve_uu(jet.W["uu"], -r)
        u = u + du
        if np.max(np.abs(du)) <= 8 * np.finfo(float).eps * (1.0 + np.max(np.abs(u))):
            return u
    raise ControlEliminationError(f"control elimination did not converge (|dL/du|={np.max(np.abs(r)):.3e})")


def control_sensitivity(p, q, kappa, v, u, jet=None):
    """Derivatives of the eliminated control.

    Returns ``(du_dy, du_dydot)`` with shapes ``(m, 2 nq)`` each, where
    ``y = (q, kappa)`` and ``ydot = (qdot, kappadot)``.  The ``kappadot``
    columns vanish identically.
    """
    if jet is None:
        jet = p.jet(q, v, u, kappa)
    nq = p.nq
    Luy = np.hstack([jet.W["uq"], jet.fu.T])
    Luydot = np.hstack([jet.W["uv"], np.zeros((p.m, nq))])
    du_dy = -_solve_uu(jet.W["uu"], Luy)
    du_dydot = -_solve_uu(jet.W["uu"], Luydot)
    return du_dy, du_dydot


@dataclass
class LegendreReport:
    grid: np.ndarray
    min_eig: np.ndarray
    overall_min: float
    verdict: str
    margin: float = STRONG_MARGIN
    degenerate_times: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "overall_min": self.overall_min,
            "verdict": self.verdict,
            "margin": self.margin,
            "n_samples": int(self.grid.size),
            "degenerate_times": [float(t) for t in self.degenerate_times],
            "grid": self.grid.tolist(),
            "min_eig": self.min_eig.tolist(),
        }


def legendre_verdict(overall_min: float, margin: float = STRONG_MARGIN) -> str:
    if overall_min > margin:
        return "strong"
    if overall_min < -margin:
        return "violated"
    return "weak-only"


def legendre_check(p, extremal, margin: float = STRONG_MARGIN, n_samples: int | None = None) -> LegendreReport:
    """Smallest eigenvalue of the symmetrised ``-L_uu`` along ``extremal``."""
    t, states, controls = extremal.sample(n_samples)
    nq = p.nq
    mins = np.empty(t.size)
    for i, (s, u) in enumerate(zip(states, controls)):
        jet = p.jet(s[:nq], s[nq:2 * nq], u, s[2 * nq:3 * nq])
        neg = -0.5 * (jet.W["uu"] + jet.W["uu"].T)
        mins[i] = np.linalg.eigvalsh(neg)[0]
    overall = float(mins.min())
    degenerate = [float(tt) for tt, e in zip(t, mins) if abs(e) <= margin]
    return LegendreReport(t, mins, overall, legendre_verdict(overall, margin), margin, degenerate)
