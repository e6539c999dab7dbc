"""
Linear-quadratic problems

    J = 1/2 int q'Q1 q + qdot'Q2 qdot + u'R u dt,   qddot = A1 q + A2 qdot + B u.

Everything here is closed form: the Kalman test, the Hamiltonian and
Euler-Lagrange system matrices, the linear map between their variational
fields, and a matrix-exponential solution of the boundary value problem used
as an oracle for the shooting solver.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .problem import BoundaryData, Dims, DifferentiableMap, SecondOrderOCP


def _mat(a, shape=None, name="matrix"):
    arr = np.atleast_2d(np.asarray(a, dtype=float))
    if shape is not None and arr.shape != shape:
        raise ValueError(f"{name} has shape {arr.shape}, expected {shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} has non-finite entries")
    return arr


def _is_pd(M) -> bool:
    try:
        np.linalg.cholesky(M)
        return True
    except np.linalg.LinAlgError:
        return False


@dataclass(frozen=True)
class LQProblem:
    Q1: np.ndarray
    Q2: np.ndarray
    R: np.ndarray
    A1: np.ndarray
    A2: np.ndarray
    B: np.ndarray
    boundary: BoundaryData
    notes: list = field(default_factory=list, compare=False)

    def __post_init__(self):
        A1 = _mat(self.A1, name="A1")
        nq = A1.shape[0]
        B = _mat(self.B, name="B")
        if B.shape[0] != nq:
            raise ValueError(f"B has {B.shape[0]} rows, expected {nq}")
        m = B.shape[1]
        set_ = lambda k, v: object.__setattr__(self, k, v)  # noqa: E731
        set_("A1", _mat(A1, (nq, nq), "A1"))
        set_("A2", _mat(self.A2, (nq, nq), "A2"))
        set_("B", B)
        notes = list(self.notes)
        for name, dim in (("Q1", nq), ("Q2", nq), ("R", m)):
            M = _mat(getattr(self, name), (dim, dim), name)
            if not np.allclose(M, M.T, rtol=0, atol=0):
                notes.append(f"{name} symmetrized")
                M = 0.5 * (M + M.T)
            set_(name, M)
        if not _is_pd(self.R):
            raise ValueError("R must be symmetric positive-definite")
        for name in ("Q1", "Q2"):
            if not _is_pd(getattr(self, name)):
                notes.append(f"{name} not positive-definite (relaxed assumption)")
        set_("notes", notes)
        b = self.boundary
        for name in ("q0", "v0", "qT", "vT"):
            if getattr(b, name).shape != (nq,):
                raise ValueError(f"boundary {name} must have length {nq}")

    @property
    def nq(self) -> int:
        return self.A1.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    @property
    def BRB(self) -> np.ndarray:
        """``B R^-1 B^T``."""
        return self.B @ np.linalg.solve(self.R, self.B.T)

    def with_boundary(self, boundary: BoundaryData) -> "LQProblem":
        return LQProblem(self.Q1, self.Q2, self.R, self.A1, self.A2, self.B, boundary)


@dataclass(frozen=True)
class LinearSystemMatrix:
    matrix: np.ndarray
    ordering: str  # "ham": (q, v, lq, lv); "el": (q, qdot, kappa, kappadot)

    def __matmul__(self, x):
        return self.matrix @ x


@dataclass(frozen=True)
class KalmanResult:
    rank: int
    satisfied: bool


def kalman_check(lq: LQProblem, rel_tol: float = 1e-10) -> KalmanResult:
    nq, m = lq.nq, lq.m
    At = np.block([[np.zeros((nq, nq)), np.eye(nq)], [lq.A1, lq.A2]])
    Bt = np.vstack([np.zeros((nq, m)), lq.B])
    cols = [Bt]
    for _ in range(2 * nq - 1):
        cols.append(At @ cols[-1])
    K = np.hstack(cols)
    _, Rq, _ = scipy.linalg.qr(K, pivoting=True)
    diag = np.abs(np.diag(Rq))
    if diag.size == 0 or diag[0] == 0:
        return KalmanResult(0, False)
    rank = int(np.sum(diag > rel_tol * diag[0]))
    return KalmanResult(rank, rank == 2 * nq)


def assemble_hamiltonian_system(lq: LQProblem) -> LinearSystemMatrix:
    nq = lq.nq
    Z = np.zeros((nq, nq))
    I = np.eye(nq)
    M = np.block([
        [Z, I, Z, Z],
        [lq.A1, lq.A2, Z, lq.BRB],
        [lq.Q1, Z, Z, -lq.A1.T],
        [Z, lq.Q2, -I, -lq.A2.T],
    ])
    return LinearSystemMatrix(M, "ham")


def assemble_el_system(lq: LQProblem) -> LinearSystemMatrix:
    nq = lq.nq
    Z = np.zeros((nq, nq))
    I = np.eye(nq)
    BRB = lq.BRB
    M = np.block([
        [Z, I, Z, Z],
        [lq.A1, lq.A2, BRB, Z],
        [Z, Z, Z, I],
        [lq.Q2 @ lq.A1 - lq.Q1, lq.Q2 @ lq.A2, lq.A1.T + lq.Q2 @ BRB, -lq.A2.T],
    ])
    return LinearSystemMatrix(M, "el")


def transform_matrix(lq: LQProblem) -> np.ndarray:
    """Matrix of ``(dq, dqdot, dkappa, dkappadot) -> (dq, dv, dlq, dlv)``."""
    nq = lq.nq
    Z = np.zeros((nq, nq))
    I = np.eye(nq)
    return np.block([
        [I, Z, Z, Z],
        [Z, I, Z, Z],
        [Z, lq.Q2, -lq.A2.T, -I],
        [Z, Z, I, Z],
    ])


def lq_transform(lq: LQProblem, el_vec) -> np.ndarray:
    """``dlv = dkappa``, ``dlq = Q2 dqdot - A2^T dkappa - dkappadot``."""
    nq = lq.nq
    x = np.asarray(el_vec, dtype=float)
    dq, dqd, dk, dkd = x[:nq], x[nq:2 * nq], x[2 * nq:3 * nq], x[3 * nq:]
    return np.concatenate([dq, dqd, lq.Q2 @ dqd - lq.A2.T @ dk - dkd, dk])


def lq_inverse_transform(lq: LQProblem, ham_vec) -> np.ndarray:
    nq = lq.nq
    z = np.asarray(ham_vec, dtype=float)
    dq, dv, dlq, dlv = z[:nq], z[nq:2 * nq], z[2 * nq:3 * nq], z[3 * nq:]
    return np.concatenate([dq, dv, dlv, lq.Q2 @ dv - lq.A2.T @ dlv - dlq])


def to_generic(lq: LQProblem, name: str = "lq") -> SecondOrderOCP:
    Q1, Q2, R, A1, A2, B = lq.Q1, lq.Q2, lq.R, lq.A1, lq.A2, lq.B
    nq, m = lq.nq, lq.m
    Znq, Znm = np.zeros((nq, nq)), np.zeros((nq, m))

    cost = DifferentiableMap(
        fun=lambda q, v, u: 0.5 * (q @ Q1 @ q + v @ Q2 @ v + u @ R @ u),
        grad=lambda q, v, u: (Q1 @ q, Q2 @ v, R @ u),
        hess=lambda q, v, u: {"qq": Q1, "qv": Znq, "qu": Znm, "vv": Q2, "vu": Znm, "uu": R},
        scalar=True,
    )
    zeros3 = {
        "qq": np.zeros((nq, nq, nq)), "qv": np.zeros((nq, nq, nq)), "qu": np.zeros((nq, nq, m)),
        "vv": np.zeros((nq, nq, nq)), "vu": np.zeros((nq, nq, m)), "uu": np.zeros((nq, m, m)),
    }
    zeros2 = {k: v[0] for k, v in zeros3.items()}
    dynamics = DifferentiableMap(
        fun=lambda q, v, u: A1 @ q + A2 @ v + B @ u,
        grad=lambda q, v, u: (A1, A2, B),
        hess=lambda q, v, u: zeros3,
        hess_weighted=lambda q, v, u, w: zeros2,
    )
    return SecondOrderOCP(Dims(nq, m), cost, dynamics, lq.boundary, name, {"lq": lq})


def linearize(p: SecondOrderOCP, q=None, v=None, u=None) -> LQProblem:
    """Quadratic/linear model of ``p`` frozen at ``(q, v, u)`` (default: initial state, zero control).

    Cross terms and affine parts are dropped; this is a warm-start model only.
    """
    q = p.boundary.q0 if q is None else np.asarray(q, dtype=float)
    v = p.boundary.v0 if v is None else np.asarray(v, dtype=float)
    u = np.zeros(p.m) if u is None else np.asarray(u, dtype=float)
    fq, fv, fu = p.dynamics.first(q, v, u)
    Cs = p.cost.second(q, v, u)
    R = 0.5 * (Cs["uu"] + Cs["uu"].T)
    if not _is_pd(R):
        R = np.eye(p.m)
    return LQProblem(Cs["qq"], Cs["vv"], R, fq, fv, fu, p.boundary)


def flow_matrix(lq: LQProblem, t: float) -> np.ndarray:
    """``exp(M t)`` of the Euler-Lagrange system."""
    return scipy.linalg.expm(assemble_el_system(lq).matrix * t)


def solve_linear_bvp(lq: LQProblem) -> np.ndarray:
    """Initial ``(kappa(0), kappadot(0))`` meeting the terminal data, by direct linear solve."""
    n2 = 2 * lq.nq
    b = lq.boundary
    Phi = flow_matrix(lq, b.T)
    x0 = np.concatenate([b.q0, b.v0])
    xT = np.concatenate([b.qT, b.vT])
    return np.linalg.solve(Phi[:n2, n2:], xT - Phi[:n2, :n2] @ x0)


def quadratic_cost(lq: LQProblem, z) -> float:
    """Closed-form cost of the Euler-Lagrange trajectory started at ``(q0, v0, z)``.

    ``int_0^T s(t)' W s(t) dt`` with ``s = exp(M t) s0`` is evaluated by Van
    Loan's block exponential.
    """
    nq = lq.nq
    n4 = 4 * nq
    M = assemble_el_system(lq).matrix
    K = np.linalg.solve(lq.R, lq.B.T)  # u = K kappa
    W = np.zeros((n4, n4))
    W[:nq, :nq] = lq.Q1
    W[nq:2 * nq, nq:2 * nq] = lq.Q2
    W[2 * nq:3 * nq, 2 * nq:3 * nq] = K.T @ lq.R @ K
    W *= 0.5
    big = np.zeros((2 * n4, 2 * n4))
    big[:n4, :n4] = -M.T
    big[:n4, n4:] = W
    big[n4:, n4:] = M
    E = scipy.linalg.expm(big * lq.boundary.T)
    gram = E[n4:, n4:].T @ E[:n4, n4:]
    s0 = np.concatenate([lq.boundary.q0, lq.boundary.v0, np.asarray(z, dtype=float)])
    return float(s0 @ gram @ s0)
