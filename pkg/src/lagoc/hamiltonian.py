"""
Pontryagin side: Hamiltonian, PMP vector field, reduced flow and its
linearisation, the extended Tulczyjew map and the costate identification.

Phase points are stacked as ``(q, v, lambda_q, lambda_v)``.  Only the normal
case is represented; the abnormal multiplier is fixed at ``-1``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .control import _solve_uu, control_sensitivity, eliminate_control
from .lagrangian import ExtendedPoint, split_state
from .numerics import DenseTrajectory, IntegratorOptions, integrate

LAMBDA0 = -1.0


@dataclass(frozen=True)
class PhasePoint:
    q: np.ndarray
    v: np.ndarray
    lq: np.ndarray
    lv: np.ndarray

    def __post_init__(self):
        for name in ("q", "v", "lq", "lv"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))

    def stacked(self) -> np.ndarray:
        return np.concatenate([self.q, self.v, self.lq, self.lv])

    @classmethod
    def from_stacked(cls, z, nq):
        z = np.asarray(z, dtype=float)
        return cls(z[:nq], z[nq:2 * nq], z[2 * nq:3 * nq], z[3 * nq:])


def _pt(pt, nq):
    return pt if isinstance(pt, PhasePoint) else PhasePoint.from_stacked(pt, nq)


def eval_H(p, pt, u) -> float:
    pt = _pt(pt, p.nq)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    return float(pt.lq @ pt.v + pt.lv @ p.dynamics(pt.q, pt.v, u) + LAMBDA0 * p.cost(pt.q, pt.v, u))


def pmp_rhs(p, pt, u) -> np.ndarray:
    """``(dH/dlq, dH/dlv, -dH/dq, -dH/dv)`` stacked."""
    pt = _pt(pt, p.nq)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    Cq, Cv, _ = p.cost.first(pt.q, pt.v, u)
    fq, fv, _ = p.dynamics.first(pt.q, pt.v, u)
    f = p.dynamics(pt.q, pt.v, u)
    lq_dot = -(fq.T @ pt.lv + LAMBDA0 * Cq)
    lv_dot = -(pt.lq + fv.T @ pt.lv + LAMBDA0 * Cv)
    return np.concatenate([pt.v, f, lq_dot, lv_dot])


def optimality_residual(p, pt, u) -> np.ndarray:
    """``dH/du = f_u^T lambda_v - C_u``."""
    pt = _pt(pt, p.nq)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    _, _, Cu = p.cost.first(pt.q, pt.v, u)
    _, _, fu = p.dynamics.first(pt.q, pt.v, u)
    return fu.T @ pt.lv + LAMBDA0 * Cu


def reduced_control(p, pt, u_init=None) -> np.ndarray:
    """``u*(x, lambda)`` through the optimality equation of the Lagrangian side."""
    pt = _pt(pt, p.nq)
    return eliminate_control(p, (pt.q, pt.lv), (pt.v, pt.lq), u_init)


def reduced_rhs(p, pt, control_law=None, u_init=None):
    """Reduced-Hamiltonian vector field.

    ``control_law(pt, u_init)`` defaults to :func:`reduced_control`.  By the
    envelope property the PMP field at ``u*`` is the reduced field.
    """
    law = control_law or (lambda x, u0: reduced_control(p, x, u0))
    pt = _pt(pt, p.nq)
    u = law(pt, u_init)
    return pmp_rhs(p, pt, u)


def integrate_reduced(p, z0, span, opts: IntegratorOptions = IntegratorOptions(), u0=None) -> DenseTrajectory:
    """Integrate the reduced-Hamiltonian flow from the stacked phase point ``z0``."""
    nq = p.nq
    warm = {"u": np.zeros(p.m) if u0 is None else np.asarray(u0, dtype=float)}

    def rhs(t, z):
        pt = PhasePoint.from_stacked(z, nq)
        u = reduced_control(p, pt, warm["u"])
        warm["u"] = u
        return pmp_rhs(p, pt, u)

    return integrate(rhs, z0, span, opts)


def hamiltonian_blocks(p, pt, u, jet=None):
    """Hessian of ``H`` over ``z = (q, v, lq, lv)``, its mixed block with ``u``, and ``H_uu``."""
    pt = _pt(pt, p.nq)
    nq, m = p.nq, p.m
    if jet is None:
        jet = p.jet(pt.q, pt.v, u, pt.lv)
    W = jet.W
    Z = np.zeros((nq, nq))
    I = np.eye(nq)
    Hzz = np.block([
        [W["qq"], W["qv"], Z, jet.fq.T],
        [W["vq"], W["vv"], I, jet.fv.T],
        [Z, I, Z, Z],
        [jet.fq, jet.fv, Z, Z],
    ])
    Hzu = np.vstack([W["qu"], W["vu"], np.zeros((nq, m)), jet.fu])
    return Hzz, Hzu, W["uu"]


def reduced_variational_matrix(p, pt, u) -> np.ndarray:
    """``J * Hr_zz`` with ``Hr_zz = H_zz - H_zu H_uu^-1 H_uz``."""
    nq = p.nq
    Hzz, Hzu, Huu = hamiltonian_blocks(p, pt, u)
    Hr = Hzz - Hzu @ _solve_uu(Huu, Hzu.T)
    n2 = 2 * nq
    J = np.zeros((2 * n2, 2 * n2))
    J[:n2, n2:] = np.eye(n2)
    J[n2:, :n2] = -np.eye(n2)
    return J @ Hr


def reduced_variational_rhs(p, extremal, t, variation):
    """Linearised reduced flow ``(dx_dot, dlambda_dot)`` along ``extremal`` at ``t``."""
    s, u = extremal.at(t)
    pt = costate_from_lagrangian(p, s, u)
    d = np.concatenate([np.atleast_1d(np.asarray(a, dtype=float)) for a in variation]) \
        if isinstance(variation, (tuple, list)) else np.asarray(variation, dtype=float)
    out = reduced_variational_matrix(p, pt, u) @ d
    n2 = 2 * p.nq
    return out[:n2], out[n2:]


def tulczyjew_map(pt: ExtendedPoint):
    """``(q, kappa, v_q, v_kappa, u) -> ((q, v_q, v_kappa, kappa), u)``."""
    return PhasePoint(pt.q, pt.vq, pt.vkappa, pt.kappa), pt.u.copy()


def tulczyjew_inverse(pt: PhasePoint, u) -> ExtendedPoint:
    return ExtendedPoint(pt.q, pt.lv, pt.v, pt.lq, u)


def costate_from_lagrangian(p, state, u) -> PhasePoint:
    """Costate identification ``lambda_v = kappa``, ``lambda_q = C_qdot - f_qdot^T kappa - kappadot``."""
    q, v, k, w = split_state(state, p.nq)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    _, Cv, _ = p.cost.first(q, v, u)
    _, fv, _ = p.dynamics.first(q, v, u)
    return PhasePoint(q, v, Cv - fv.T @ k - w, k)


def lagrangian_from_costate(p, pt, u) -> np.ndarray:
    """Inverse identification: stacked ``(q, qdot, kappa, kappadot)``."""
    pt = _pt(pt, p.nq)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    _, Cv, _ = p.cost.first(pt.q, pt.v, u)
    _, fv, _ = p.dynamics.first(pt.q, pt.v, u)
    w = Cv - fv.T @ pt.lv - pt.lq
    return np.concatenate([pt.q, pt.v, pt.lv, w])


def variational_costate(p, state, u, dstate) -> np.ndarray:
    """Linearised identification: ``(dq, dqdot, dkappa, dkappadot) -> (dq, dv, dlq, dlv)``.

    ``dlambda_q = -W_vq dq - W_vv dqdot - W_vu du - f_qdot^T dkappa - dkappadot``
    with ``du`` from the control sensitivity.
    """
    nq = p.nq
    q, v, k, _ = split_state(state, nq)
    dq, dv, dk, dw = split_state(dstate, nq)
    jet = p.jet(q, v, u, k)
    du_dy, du_dyd = control_sensitivity(p, q, k, v, u, jet)
    du = du_dy @ np.concatenate([dq, dk]) + du_dyd @ np.concatenate([dv, dw])
    W = jet.W
    dlq = -W["vq"] @ dq - W["vv"] @ dv - W["vu"] @ du - jet.fv.T @ dk - dw
    return np.concatenate([dq, dv, dlq, dk])


def variational_costate_inverse(p, state, u, dz) -> np.ndarray:
    """Inverse of :func:`variational_costate`; ``du`` does not depend on ``dkappadot``."""
    nq = p.nq
    q, v, k, _ = split_state(state, nq)
    dq, dv, dlq, dlv = (np.asarray(dz, dtype=float)[i * nq:(i + 1) * nq] for i in range(4))
    base = variational_costate(p, state, u, np.concatenate([dq, dv, dlv, np.zeros(nq)]))
    # dlq is affine in dkappadot with coefficient -I
    dw = base[2 * nq:3 * nq] - dlq
    return np.concatenate([dq, dv, dlv, dw])
