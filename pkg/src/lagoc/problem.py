"""
Second-order optimal control problems.

A problem is the minimisation of ``J = int_0^T C(q, qdot, u) dt`` subject to
``qddot = f(q, qdot, u)`` with both endpoints of ``(q, qdot)`` fixed.  Cost and
dynamics are wrapped in :class:`DifferentiableMap`, which carries first and
second partial derivatives in the three argument groups ``q``, ``v`` (the
velocity slot) and ``u``.  Missing derivatives fall back to central
differences.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

ARGS = ("q", "v", "u")
PAIRS = ("qq", "qv", "qu", "vv", "vu", "uu")


@dataclass(frozen=True)
class Dims:
    nq: int
    m: int

    def __post_init__(self):
        if int(self.nq) < 1 or int(self.m) < 1:
            raise ValueError(f"dimensions must be positive, got nq={self.nq}, m={self.m}")

    @property
    def n(self) -> int:
        """State dimension ``2 * nq``."""
        return 2 * self.nq


@dataclass(frozen=True)
class BoundaryData:
    q0: np.ndarray
    v0: np.ndarray
    qT: np.ndarray
    vT: np.ndarray
    T: float

    def __post_init__(self):
        for name in ("q0", "v0", "qT", "vT"):
            arr = np.atleast_1d(np.asarray(getattr(self, name), dtype=float)).copy()
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "T", float(self.T))

    def replace(self, **changes) -> "BoundaryData":
        data = dict(q0=self.q0, v0=self.v0, qT=self.qT, vT=self.vT, T=self.T)
        data.update(changes)
        return BoundaryData(**data)


def _args(q, v, u):
    return tuple(np.atleast_1d(np.asarray(x, dtype=float)) for x in (q, v, u))


def _step(x: np.ndarray, rel: float) -> np.ndarray:
    return rel * (1.0 + np.abs(x))


def _fd_first(fun, q, v, u, rel=1e-6):
    """Central-difference partials of ``fun`` in each argument group."""
    args = [q, v, u]
    out = []
    for k in range(3):
        x = args[k]
        h = _step(x, rel)
        cols = []
        for i in range(x.size):
            xp = x.copy()
            xm = x.copy()
            xp[i] += h[i]
            xm[i] -= h[i]
            ap = list(args)
            am = list(args)
            ap[k] = xp
            am[k] = xm
            cols.append((np.asarray(fun(*ap), float) - np.asarray(fun(*am), float)) / (2 * h[i]))
        out.append(np.stack(cols, axis=-1))
    return tuple(out)


@dataclass(frozen=True)
class DifferentiableMap:
    """A C^2 map ``g(q, v, u)`` with optional analytic derivatives.

    Parameters
    ----------
    fun : callable
        ``fun(q, v, u)``; a float for costs, an array of shape ``(nout,)``
        for dynamics.
    grad : callable, optional
        ``grad(q, v, u) -> (g_q, g_v, g_u)``.  For vector maps each entry has
        shape ``(nout, n_arg)``.
    hess : callable, optional
        ``hess(q, v, u) -> dict`` with keys ``qq qv qu vv vu uu``.  Scalar maps
        give matrices ``(n_a, n_b)``; vector maps give tensors
        ``(nout, n_a, n_b)``.
    hess_weighted : callable, optional
        Fast path for vector maps: ``hess_weighted(q, v, u, w)`` returns the
        same dict already contracted with the output weight ``w``.
    scalar : bool
        Whether ``fun`` is scalar valued.
    """

    fun: Callable
    grad: Optional[Callable] = None
    hess: Optional[Callable] = None
    hess_weighted: Optional[Callable] = None
    scalar: bool = False

    @property
    def mode(self) -> str:
        if self.grad is not None and (self.hess is not None or self.hess_weighted is not None):
            return "analytic"
        return "finite-difference"

    def __call__(self, q, v, u):
        q, v, u = _args(q, v, u)
        val = self.fun(q, v, u)
        return float(val) if self.scalar else np.asarray(val, dtype=float)

    def first(self, q, v, u):
        q, v, u = _args(q, v, u)
        if self.grad is not None:
            return tuple(np.asarray(g, dtype=float) for g in self.grad(q, v, u))
        return _fd_first(self.fun, q, v, u)

    def second(self, q, v, u, w=None) -> dict:
        """Second partials as a dict over all nine ordered pairs.

        Vector maps need the output weight ``w``; the blocks returned are
        then ``sum_i w_i d^2 g_i``.
        """
        q, v, u = _args(q, v, u)
        if self.scalar:
            if self.hess is not None:
                blocks = {k: np.asarray(b, dtype=float) for k, b in self.hess(q, v, u).items()}
            else:
                blocks = self._fd_second(lambda *a: self.first(*a), q, v, u)
        else:
            if w is None:
                raise ValueError("vector-valued map needs an output weight for its second partials")
            w = np.asarray(w, dtype=float)
            if self.hess_weighted is not None:
                blocks = {k: np.asarray(b, dtype=float) for k, b in self.hess_weighted(q, v, u, w).items()}
            elif self.hess is not None:
                blocks = {k: np.tensordot(w, np.asarray(b, dtype=float), axes=1)
                          for k, b in self.hess(q, v, u).items()}
            else:
                blocks = self._fd_second(lambda *a: tuple(w @ g for g in self.first(*a)), q, v, u)
        return _complete(blocks)

    def _fd_second(self, first, q, v, u) -> dict:
        # differencing FD gradients needs the coarser step
        rel = 1e-6 if self.grad is not None else 1e-4
        args = [q, v, u]
        blocks = {}
        for kb, b in enumerate(ARGS):
            x = args[kb]
            h = _step(x, rel)
            cols = {a: [] for a in ARGS}
            for i in range(x.size):
                xp = x.copy()
                xm = x.copy()
                xp[i] += h[i]
                xm[i] -= h[i]
                ap = list(args)
                am = list(args)
                ap[kb] = xp
                am[kb] = xm
                gp = first(*ap)
                gm = first(*am)
                for ka, a in enumerate(ARGS):
                    cols[a].append((gp[ka] - gm[ka]) / (2 * h[i]))
            for a in ARGS:
                blocks[a + b] = np.stack(cols[a], axis=-1)
        # symmetrise the mixed estimates
        out = {}
        for key in PAIRS:
            a, b = key
            out[key] = 0.5 * (blocks[a + b] + np.swapaxes(blocks[b + a], -1, -2))
        return out


def _complete(blocks: dict) -> dict:
    """Add the transposed pairs ``vq``, ``uq``, ``uv``."""
    out = dict(blocks)
    for key in ("qv", "qu", "vu"):
        out[key[::-1]] = np.swapaxes(out[key], -1, -2)
    return out


@dataclass(frozen=True)
class Jet:
    """Cost/dynamics derivatives at one point, plus the Hessian ``W`` of
    ``w . f - C`` over ``(q, v, u)``.

    ``W`` is the second-derivative block of the new control Lagrangian
    (weight ``kappa``) and of Pontryagin's Hamiltonian (weight ``lambda_v``).
    """

    C: float
    f: np.ndarray
    Cq: np.ndarray
    Cv: np.ndarray
    Cu: np.ndarray
    fq: np.ndarray
    fv: np.ndarray
    fu: np.ndarray
    W: dict


@dataclass(frozen=True)
class SecondOrderOCP:
    dims: Dims
    cost: DifferentiableMap
    dynamics: DifferentiableMap
    boundary: BoundaryData
    name: str = "custom"
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def nq(self) -> int:
        return self.dims.nq

    @property
    def m(self) -> int:
        return self.dims.m

    @property
    def T(self) -> float:
        return self.boundary.T

    def with_boundary(self, boundary: BoundaryData) -> "SecondOrderOCP":
        return SecondOrderOCP(self.dims, self.cost, self.dynamics, boundary, self.name, dict(self.meta))

    def jet(self, q, v, u, w, second: bool = True) -> Jet:
        q = np.asarray(q, dtype=float)
        v = np.asarray(v, dtype=float)
        u = np.asarray(u, dtype=float)
        w = np.asarray(w, dtype=float)
        Cq, Cv, Cu = self.cost.first(q, v, u)
        fq, fv, fu = self.dynamics.first(q, v, u)
        W = {}
        if second:
            Cs = self.cost.second(q, v, u)
            fs = self.dynamics.second(q, v, u, w)
            W = {k: fs[k] - Cs[k] for k in Cs}
        return Jet(self.cost(q, v, u), self.dynamics(q, v, u), Cq, Cv, Cu, fq, fv, fu, W)


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def valid(self) -> bool:
        return not self.violations


def validate(p: SecondOrderOCP) -> ValidationReport:
    """Check dimensions, boundary data and horizon without raising."""
    report = ValidationReport()
    nq, m = p.dims.nq, p.dims.m
    b = p.boundary
    if not np.isfinite(b.T) or b.T <= 0:
        report.violations.append("horizon must be positive")
    for name in ("q0", "v0", "qT", "vT"):
        arr = getattr(b, name)
        if arr.shape != (nq,):
            report.violations.append(f"boundary dimension: {name} has shape {arr.shape}, expected ({nq},)")
        elif not np.all(np.isfinite(arr)):
            report.violations.append(f"non-finite boundary data in {name}")
    q = np.resize(b.q0, nq).astype(float)
    v = np.resize(b.v0, nq).astype(float)
    u = np.zeros(m)
    try:
        fval = np.asarray(p.dynamics.fun(q, v, u), dtype=float)
        if fval.shape != (nq,):
            report.violations.append(f"dynamics dimension: f returns shape {fval.shape}, expected ({nq},)")
    except Exception as exc:  # noqa: BLE001 - report, never raise
        report.violations.append(f"dynamics evaluation failed: {exc}")
    try:
        cval = np.asarray(p.cost.fun(q, v, u), dtype=float)
        if cval.size != 1:
            report.violations.append(f"cost must be scalar, got shape {cval.shape}")
    except Exception as exc:  # noqa: BLE001
        report.violations.append(f"cost evaluation failed: {exc}")
    if p.dynamics.scalar:
        report.violations.append("dynamics must be vector valued")
    if not p.cost.scalar:
        report.violations.append("cost must be flagged scalar")
    return report


def _rel_err(analytic, fd) -> float:
    analytic = np.asarray(analytic, dtype=float)
    fd = np.asarray(fd, dtype=float)
    if analytic.shape != fd.shape:
        return np.inf
    if analytic.size == 0:
        return 0.0
    return float(np.max(np.abs(analytic - fd)) / max(np.max(np.abs(fd)), 1.0))


def check_derivatives(g: DifferentiableMap, point, h: float = 1e-5, weight=None) -> dict:
    """Worst relative error of each derivative block against central differences.

    First partials are differenced from ``g`` itself, second partials from
    the analytic first partials.  For vector maps the second partials are
    compared both as full tensors (when provided) and contracted with
    ``weight`` (a fixed pseudo-random vector when omitted).  The relative
    error is ``max|analytic - fd| / max(max|fd|, 1)``.

    Raises
    ------
    FloatingPointError
        If any probe evaluation is non-finite.
    """
    if h <= 0:
        raise ValueError("step must be positive")
    q, v, u = (np.atleast_1d(np.asarray(x, dtype=float)) for x in point)
    args = [q, v, u]

    def evaluate(fn, *a):
        val = np.asarray(fn(*a), dtype=float)
        if not np.all(np.isfinite(val)):
            raise FloatingPointError("non-finite evaluation at derivative probe point")
        return val

    evaluate(g.fun, q, v, u)
    errors = {}
    analytic_first = g.first(q, v, u)
    for k, name in enumerate(ARGS):
        x = args[k]
        cols = []
        for i in range(x.size):
            ap = list(args)
            am = list(args)
            ap[k] = x.copy()
            am[k] = x.copy()
            ap[k][i] += h
            am[k][i] -= h
            cols.append((evaluate(g.fun, *ap) - evaluate(g.fun, *am)) / (2 * h))
        errors[name] = _rel_err(analytic_first[k], np.stack(cols, axis=-1))

    if g.grad is None:
        return errors

    def fd_hess(first_fn):
        blocks = {}
        for kb, b in enumerate(ARGS):
            x = args[kb]
            cols = {a: [] for a in ARGS}
            for i in range(x.size):
                ap = list(args)
                am = list(args)
                ap[kb] = x.copy()
                am[kb] = x.copy()
                ap[kb][i] += h
                am[kb][i] -= h
                gp = first_fn(*ap)
                gm = first_fn(*am)
                for ka, a in enumerate(ARGS):
                    d = (np.asarray(gp[ka]) - np.asarray(gm[ka])) / (2 * h)
                    if not np.all(np.isfinite(d)):
                        raise FloatingPointError("non-finite evaluation at derivative probe point")
                    cols[a].append(d)
            for a in ARGS:
                blocks[a + b] = np.stack(cols[a], axis=-1)
        return blocks

    if g.scalar:
        if g.hess is not None:
            fd = fd_hess(g.grad)
            an = g.hess(q, v, u)
            for key in PAIRS:
                errors[key] = _rel_err(an[key], fd[key])
        return errors

    fd = fd_hess(g.grad)
    if g.hess is not None:
        an = g.hess(q, v, u)
        for key in PAIRS:
            errors[key] = _rel_err(an[key], fd[key])
    if weight is None:
        weight = np.random.default_rng(12345).standard_normal(np.asarray(g.fun(q, v, u)).size)
    weight = np.asarray(weight, dtype=float)
    if g.hess_weighted is not None:
        an = g.hess_weighted(q, v, u, weight)
        for key in PAIRS:
            contracted = np.tensordot(weight, fd[key], axes=1)
            errors["w" + key] = _rel_err(an[key], contracted)
    return errors
