"""
The new control Lagrangian ``L(q, kappa, v_q, v_kappa, u) = v_kappa.v_q + kappa.f - C``.

States along the Euler-Lagrange flow are stacked as ``(q, qdot, kappa,
kappadot)``; ``y = (q, kappa)`` and ``ydot = (qdot, kappadot)`` denote the
configuration and velocity halves of the Lagrangian phase space.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .control import _solve_uu
from .errors import LagocError
from .numerics import composite_simpson

TIME_FD_STEP = 1e-4


@dataclass(frozen=True)
class ExtendedPoint:
    q: np.ndarray
    kappa: np.ndarray
    vq: np.ndarray
    vkappa: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        for name in ("q", "kappa", "vq", "vkappa", "u"):
            object.__setattr__(self, name, np.atleast_1d(np.asarray(getattr(self, name), dtype=float)))

    @classmethod
    def from_state(cls, state, u, nq):
        q, v, k, w = split_state(state, nq)
        return cls(q, k, v, w, u)


@dataclass(frozen=True)
class LagrangianHessianBlocks:
    """Second derivatives of the new Lagrangian; ``y = (q, kappa)``,
    ``yd = (v_q, v_kappa)``.  Off-diagonal names read row-then-column."""

    yy: np.ndarray
    yyd: np.ndarray
    ydyd: np.ndarray
    yu: np.ndarray
    ydu: np.ndarray
    uu: np.ndarray

    def stacked(self):
        """Hessian over ``(y, yd)`` and its mixed block with ``u``."""
        G = np.block([[self.yy, self.yyd], [self.yyd.T, self.ydyd]])
        Gu = np.vstack([self.yu, self.ydu])
        return G, Gu


def split_state(state, nq):
    if isinstance(state, (tuple, list)) and len(state) == 4:
        state = np.concatenate([np.atleast_1d(np.asarray(s, dtype=float)) for s in state])
    s = np.asarray(state, dtype=float)
    return s[:nq], s[nq:2 * nq], s[2 * nq:3 * nq], s[3 * nq:4 * nq]


def eval_L(p, pt: ExtendedPoint) -> float:
    C = p.cost(pt.q, pt.vq, pt.u)
    f = p.dynamics(pt.q, pt.vq, pt.u)
    val = float(pt.vkappa @ pt.vq + pt.kappa @ f - C)
    if not np.isfinite(val):
        raise FloatingPointError("non-finite Lagrangian value")
    return val


def hessian_blocks(p, pt: ExtendedPoint, jet=None) -> LagrangianHessianBlocks:
    nq, m = p.nq, p.m
    if jet is None:
        jet = p.jet(pt.q, pt.vq, pt.u, pt.kappa)
    W = jet.W
    Z = np.zeros((nq, nq))
    I = np.eye(nq)
    yy = np.block([[W["qq"], jet.fq.T], [jet.fq, Z]])
    yyd = np.block([[W["qv"], Z], [jet.fv, Z]])
    ydyd = np.block([[W["vv"], I], [I, Z]])
    yu = np.vstack([W["qu"], jet.fu])
    ydu = np.vstack([W["vu"], np.zeros((nq, m))])
    return LagrangianHessianBlocks(yy, yyd, ydyd, yu, ydu, W["uu"].copy())


def _el_parts(p, q, v, k, w, u, jet):
    """``(qddot, kappaddot, udot)`` for the Euler-Lagrange flow."""
    f = jet.f
    W = jet.W
    udot = -_solve_uu(W["uu"], W["uq"] @ v + jet.fu.T @ w + W["uv"] @ f)
    kdd = -W["vq"] @ v - W["vv"] @ f - W["vu"] @ udot - jet.fv.T @ w - jet.Cq + jet.fq.T @ k
    return f, kdd, udot


def el_rhs(p, state, u):
    """Explicit ``(qddot, kappaddot)`` of the augmented Euler-Lagrange system.

    The total time derivative of ``C_qdot - f_qdot^T kappa`` is expanded by
    the chain rule, with ``udot`` taken from the linearised optimality
    equation.  Raises :class:`SingularHessian` when ``L_uu`` degenerates.
    """
    q, v, k, w = split_state(state, p.nq)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    jet = p.jet(q, v, u, k)
    f, kdd, _ = _el_parts(p, q, v, k, w, u, jet)
    return f, kdd


def el_flow(p, state, u):
    """Full first-order derivative ``(qdot, qddot, kappadot, kappaddot)`` and ``udot``."""
    q, v, k, w = split_state(state, p.nq)
    jet = p.jet(q, v, u, k)
    f, kdd, udot = _el_parts(p, q, v, k, w, u, jet)
    return np.concatenate([v, f, w, kdd]), udot


def energy(p, state, u) -> float:
    """Conserved energy of the Euler-Lagrange flow, ``L - <dL/dydot, ydot>``.

    With this sign it equals Pontryagin's Hamiltonian under the costate
    identification.
    """
    q, v, k, w = split_state(state, p.nq)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    _, Cv, _ = p.cost.first(q, v, u)
    _, fv, _ = p.dynamics.first(q, v, u)
    L = eval_L(p, ExtendedPoint(q, k, v, w, u))
    p_vq = w + fv.T @ k - Cv
    p_vk = v
    return float(L - p_vq @ v - p_vk @ w)


def reduced_hessian(p, state, u):
    """Schur-complement Hessian of the control-eliminated Lagrangian over ``(y, ydot)``."""
    q, v, k, w = split_state(state, p.nq)
    blocks = hessian_blocks(p, ExtendedPoint(q, k, v, w, u))
    G, Gu = blocks.stacked()
    return G - Gu @ _solve_uu(blocks.uu, Gu.T)


# permutation taking (y, ydot) = (q, kappa, qdot, kappadot) to (q, qdot, kappa, kappadot)
def _perm(nq):
    return np.concatenate([np.arange(nq), np.arange(2 * nq, 3 * nq),
                           np.arange(nq, 2 * nq), np.arange(3 * nq, 4 * nq)])


def jacobi_matrix(p, state, u, h: float = TIME_FD_STEP) -> np.ndarray:
    """Matrix ``M`` with ``d/dt (dq, dqdot, dkappa, dkappadot) = M (...)``.

    The Jacobi equation is the linearised Euler-Lagrange equation of the
    reduced Lagrangian:

        d/dt (P dy + S dydot) = Lr_yy dy + P^T dydot,

    with ``P = d^2 Lr / dydot dy`` and ``S = d^2 Lr / dydot^2``.  Time
    derivatives of ``P`` and ``S`` along the extremal are central
    differences over the flow direction with time step ``h``.
    """
    nq = p.nq
    n2 = 2 * nq
    state = np.asarray(state, dtype=float)
    u = np.atleast_1d(np.asarray(u, dtype=float))
    G = reduced_hessian(p, state, u)
    sdot, udot = el_flow(p, state, u)
    Gp = reduced_hessian(p, state + h * sdot, u + h * udot)
    Gm = reduced_hessian(p, state - h * sdot, u - h * udot)
    Gdot = (Gp - Gm) / (2 * h)
    Lyy = G[:n2, :n2]
    P = G[n2:, :n2]
    S = G[n2:, n2:]
    Pdot = Gdot[n2:, :n2]
    Sdot = Gdot[n2:, n2:]
    try:
        A_y = np.linalg.solve(S, Lyy - Pdot)
        A_yd = np.linalg.solve(S, P.T - P - Sdot)
    except np.linalg.LinAlgError as exc:
        raise LagocError("velocity Hessian of the new Lagrangian is singular") from exc
    M = np.zeros((2 * n2, 2 * n2))
    M[:n2, n2:] = np.eye(n2)
    M[n2:, :n2] = A_y
    M[n2:, n2:] = A_yd
    idx = _perm(nq)
    return M[np.ix_(idx, idx)]


def reduced_jacobi_rhs(p, extremal, t, variation):
    """``(dqddot, dkappaddot)`` of the Jacobi equation along ``extremal`` at ``t``."""
    nq = p.nq
    s, u = extremal.at(t)
    d = np.concatenate([np.atleast_1d(np.asarray(a, dtype=float)) for a in variation]) \
        if isinstance(variation, (tuple, list)) else np.asarray(variation, dtype=float)
    out = jacobi_matrix(p, s, u) @ d
    return out[nq:2 * nq], out[3 * nq:]


def _variation_values(dq, du, t):
    vals = [dq(tt) for tt in t]
    q = np.array([np.atleast_1d(a[0]) for a in vals], dtype=float)
    qd = np.array([np.atleast_1d(a[1]) for a in vals], dtype=float)
    qdd = np.array([np.atleast_1d(a[2]) for a in vals], dtype=float)
    u = np.array([np.atleast_1d(du(tt)) for tt in t], dtype=float)
    return q, qd, qdd, u


def second_variation(p, extremal, dq, du, n_intervals: int = 2000, check_tol: float = 1e-8) -> float:
    """Second variation of the frozen-adjoint augmented functional.

    ``dq(t)`` returns ``(dq, dqdot, dqddot)`` and ``du(t)`` the control
    variation.  The value is

        -int (dx, du)^T [[L_xx, L_xu], [L_ux, L_uu]] (dx, du) dt,  x = (q, qdot),

    integrated with composite Simpson on a uniform grid.

    Raises
    ------
    ValueError
        If the variation does not vanish to first order at both ends or
        violates the linearised dynamics.
    """
    nq = p.nq
    t = np.linspace(0.0, p.T, n_intervals + 1)
    vq, vqd, vqdd, vu = _variation_values(dq, du, t)
    scale = 1.0 + max(np.max(np.abs(vq)), np.max(np.abs(vqd)), np.max(np.abs(vu)))
    for arr, name in ((vq, "dq"), (vqd, "dqdot")):
        if np.max(np.abs(arr[[0, -1]])) > check_tol * scale:
            raise ValueError(f"variation {name} must vanish at t=0 and t=T")
    _, states, controls = extremal.sample(t=t)
    integrand = np.empty(t.size)
    worst = 0.0
    for i, (s, u) in enumerate(zip(states, controls)):
        q, v, k, _ = split_state(s, nq)
        jet = p.jet(q, v, u, k)
        W = jet.W
        lin = jet.fq @ vq[i] + jet.fv @ vqd[i] + jet.fu @ vu[i]
        worst = max(worst, float(np.max(np.abs(vqdd[i] - lin))))
        dx = np.concatenate([vq[i], vqd[i]])
        Lxx = np.block([[W["qq"], W["qv"]], [W["vq"], W["vv"]]])
        Lxu = np.vstack([W["qu"], W["vu"]])
        integrand[i] = -(dx @ Lxx @ dx + 2 * dx @ Lxu @ vu[i] + vu[i] @ W["uu"] @ vu[i])
    if worst > 1e-6 * scale:
        raise ValueError(f"variation violates the linearised dynamics (max defect {worst:.3e})")
    return composite_simpson(integrand, t)


def frozen_augmented_cost(p, extremal, q_path, u_path, n_intervals: int = 2000) -> float:
    """``int C - kappadot*.qdot - kappa*.f dt`` along ``(q, u)`` with the adjoint frozen.

    The boundary term of the integrated-by-parts functional is omitted; it is
    constant over variations with fixed endpoint velocities.
    """
    nq = p.nq
    t = np.linspace(0.0, p.T, n_intervals + 1)
    _, states, _ = extremal.sample(t=t)
    vals = np.empty(t.size)
    for i, tt in enumerate(t):
        q, qd = (np.atleast_1d(np.asarray(a, dtype=float)) for a in q_path(tt)[:2])
        u = np.atleast_1d(np.asarray(u_path(tt), dtype=float))
        _, _, k, w = split_state(states[i], nq)
        vals[i] = -eval_L(p, ExtendedPoint(q, k, qd, w, u))
    return composite_simpson(vals, t)
