"""
Single shooting on the Euler-Lagrange flow of the new control Lagrangian.

The unknowns are ``z = (kappa(0), kappadot(0))``; ``q(0)`` and ``qdot(0)`` are
fixed by the boundary data, and Newton drives ``(q(T) - qT, qdot(T) - vT)``
to zero.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .control import eliminate_control
from .errors import LagocError, NoConvergence
from .lagrangian import el_flow, jacobi_matrix, split_state
from .lq import linearize, solve_linear_bvp
from .numerics import (
    DenseTrajectory,
    IntegratorOptions,
    NewtonOptions,
    composite_simpson,
    integrate,
    newton_solve,
)


@dataclass(frozen=True)
class ShootingOptions:
    tol: float = 1e-9
    max_iter: int = 30
    integrator: IntegratorOptions = IntegratorOptions()
    n_samples: int = 2001
    warm_start: Optional[str] = None  # None or "lq"
    jacobian: str = "fd"  # "fd" or "variational"

    def __post_init__(self):
        if self.tol <= 0 or self.max_iter < 0:
            raise ValueError("shooting tolerance must be positive and max_iter non-negative")
        if self.jacobian not in ("fd", "variational"):
            raise ValueError("jacobian must be 'fd' or 'variational'")


def el_vector_field(p, u0=None):
    """Right-hand side ``(t, s) -> sdot`` with the control eliminated and warm-started.

    The returned closure owns its warm-start state; use one per integration.
    """
    warm = {"u": np.zeros(p.m) if u0 is None else np.asarray(u0, dtype=float)}
    nq = p.nq

    def rhs(t, s):
        q, v, k, w = split_state(s, nq)
        u = eliminate_control(p, (q, k), (v, w), warm["u"])
        warm["u"] = u
        sdot, _ = el_flow(p, s, u)
        return sdot

    return rhs


def integrate_el(p, s0, opts: IntegratorOptions = IntegratorOptions(), t_end=None) -> DenseTrajectory:
    return integrate(el_vector_field(p), s0, (0.0, p.T if t_end is None else t_end), opts)


def initial_state(p, z) -> np.ndarray:
    b = p.boundary
    return np.concatenate([b.q0, b.v0, np.asarray(z, dtype=float)])


def shoot_residual(p, z, opts: IntegratorOptions = IntegratorOptions()) -> np.ndarray:
    """``(q(T) - qT, qdot(T) - vT)`` for initial covector ``z = (kappa(0), kappadot(0))``."""
    traj = integrate_el(p, initial_state(p, z), opts)
    nq = p.nq
    end = traj.y[-1]
    b = p.boundary
    return np.concatenate([end[:nq] - b.qT, end[nq:2 * nq] - b.vT])


@dataclass
class Extremal:
    """Solved extremal with dense state ``(q, qdot, kappa, kappadot)`` and node controls."""

    problem: object
    traj: DenseTrajectory
    u_nodes: np.ndarray
    z: np.ndarray
    J: float = float("nan")
    iterations: int = 0
    residual: float = float("nan")
    residual_history: list = field(default_factory=list)
    n_samples: int = 2001

    @property
    def T(self) -> float:
        return self.traj.t_end

    def _u_guess(self, t):
        return np.array([np.interp(t, self.traj.t, self.u_nodes[:, j]) for j in range(self.u_nodes.shape[1])])

    def at(self, t):
        """State and eliminated control at time ``t``."""
        s = self.traj(t)
        nq = self.problem.nq
        q, v, k, w = split_state(s, nq)
        u = eliminate_control(self.problem, (q, k), (v, w), self._u_guess(t))
        return s, u

    def sample(self, n: Optional[int] = None, t=None):
        """``(t, states, controls)`` on a uniform grid of ``n`` points (or given ``t``)."""
        if t is None:
            t = np.linspace(0.0, self.T, n or self.n_samples)
        t = np.asarray(t, dtype=float)
        states = self.traj(t)
        nq = self.problem.nq
        controls = np.empty((t.size, self.problem.m))
        guess = self._u_guess(t[0])
        for i, s in enumerate(states):
            q, v, k, w = split_state(s, nq)
            guess = eliminate_control(self.problem, (q, k), (v, w), guess)
            controls[i] = guess
        return t, states, controls


def cost(p, extremal: Extremal, n_samples: Optional[int] = None) -> float:
    """Composite Simpson quadrature of ``C(q, qdot, u*)`` on a uniform grid."""
    n = n_samples or extremal.n_samples
    if n % 2 == 0:
        n += 1
    t, states, controls = extremal.sample(n)
    nq = p.nq
    vals = np.array([p.cost(s[:nq], s[nq:2 * nq], u) for s, u in zip(states, controls)])
    return composite_simpson(vals, t)


def _variational_jacobian(p, z, opts: IntegratorOptions):
    """Jacobian of the shooting residual from the Jacobi equation along the current flow."""
    nq = p.nq
    n4 = 4 * nq
    s0 = initial_state(p, z)
    traj = integrate_el(p, s0, opts)
    warm = {"u": np.zeros(p.m)}

    def rhs(t, y):
        s = traj(t)
        q, v, k, w = split_state(s, nq)
        u = eliminate_control(p, (q, k), (v, w), warm["u"])
        warm["u"] = u
        Phi = y.reshape(n4, 2 * nq)
        return (jacobi_matrix(p, s, u) @ Phi).ravel()

    Phi0 = np.zeros((n4, 2 * nq))
    Phi0[2 * nq:, :] = np.eye(2 * nq)
    sens = integrate(rhs, Phi0.ravel(), (0.0, p.T), opts)
    PhiT = sens.y[-1].reshape(n4, 2 * nq)
    return PhiT[:2 * nq, :]


def solve(p, z0=None, opts: ShootingOptions = ShootingOptions()) -> Extremal:
    """Newton shooting for an extremal.

    Raises
    ------
    NoConvergence
        With the best covector, residual history and last residual.
    """
    nq = p.nq
    if z0 is None:
        z0 = np.zeros(2 * nq)
        if opts.warm_start == "lq":
            try:
                z0 = solve_linear_bvp(linearize(p))
            except (np.linalg.LinAlgError, ValueError):
                z0 = np.zeros(2 * nq)
    z0 = np.asarray(z0, dtype=float)
    if z0.shape != (2 * nq,) or not np.all(np.isfinite(z0)):
        raise ValueError(f"initial covector must be a finite vector of length {2 * nq}")

    F = lambda z: shoot_residual(p, z, opts.integrator)  # noqa: E731
    J = (lambda z: _variational_jacobian(p, z, opts.integrator)) if opts.jacobian == "variational" else None
    try:
        res = newton_solve(F, J, z0, NewtonOptions(tol=opts.tol, max_iter=opts.max_iter))
    except LagocError as exc:
        best = getattr(exc, "best", None)
        history = getattr(exc, "history", [])
        raise NoConvergence(f"shooting failed: {exc}", best, history,
                            history[-1] if history else None) from exc

    traj = integrate_el(p, initial_state(p, res.z), opts.integrator)
    u_nodes = np.empty((traj.t.size, p.m))
    guess = np.zeros(p.m)
    for i, s in enumerate(traj.y):
        q, v, k, w = split_state(s, nq)
        guess = eliminate_control(p, (q, k), (v, w), guess)
        u_nodes[i] = guess
    end = traj.y[-1]
    b = p.boundary
    residual = float(np.max(np.abs(np.concatenate([end[:nq] - b.qT, end[nq:2 * nq] - b.vT]))))
    ext = Extremal(p, traj, u_nodes, res.z, iterations=res.iterations, residual=residual,
                   residual_history=res.history, n_samples=opts.n_samples)
    ext.J = cost(p, ext)
    return ext
