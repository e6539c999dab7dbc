"""
ODE integration with dense output, scalar root bracketing and damped Newton.

The adaptive integrator is the Dormand-Prince 5(4) pair from
:func:`scipy.integrate.solve_ivp`; the classical RK4 scheme is provided for
fixed-step runs.  Both return a :class:`DenseTrajectory`; DP45 states are
interpolated by the scheme's own quartic continuous extension, RK4 states
(and all derivatives) by cubic Hermite polynomials built from node data.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    InvalidBracket,
    LagocError,
    LineSearchFailure,
    MaxIterations,
    NonFiniteState,
    SingularJacobian,
    StepSizeUnderflow,
)


@dataclass
class DenseTrajectory:
    """Node states ``y[i]`` and derivatives ``dy[i]`` at strictly increasing ``t[i]``."""

    t: np.ndarray
    y: np.ndarray
    dy: np.ndarray
    method: str = "DP45"
    abs_tol: Optional[float] = None
    rel_tol: Optional[float] = None
    n_steps: int = 0
    n_rejected: int = 0
    n_rhs: int = 0
    interpolant: Optional[Callable] = field(default=None, repr=False)

    @property
    def t0(self) -> float:
        return float(self.t[0])

    @property
    def t_end(self) -> float:
        return float(self.t[-1])

    @property
    def first_step(self) -> float:
        return float(self.t[1] - self.t[0]) if self.t.size > 1 else 0.0

    def _locate(self, tq):
        tq = np.asarray(tq, dtype=float)
        span = self.t_end - self.t0
        slack = 1e-12 * max(span, 1.0)
        if np.any(tq < self.t0 - slack) or np.any(tq > self.t_end + slack):
            raise ValueError(f"evaluation outside [{self.t0}, {self.t_end}]")
        tq = np.clip(tq, self.t0, self.t_end)
        idx = np.clip(np.searchsorted(self.t, tq, side="right") - 1, 0, self.t.size - 2)
        return tq, idx

    def __call__(self, tq):
        """State at time(s) ``tq``; returns ``(d,)`` for a scalar time."""
        scalar = np.ndim(tq) == 0
        tq, i = self._locate(np.atleast_1d(tq))
        if self.interpolant is not None:
            out = np.asarray(self.interpolant(tq), dtype=float).T.reshape(tq.size, -1)
        else:
            out = self._hermite(tq, i)
        # reproduce nodes exactly
        at_node = np.isin(tq, self.t)
        if np.any(at_node):
            out[at_node] = self.y[np.searchsorted(self.t, tq[at_node])]
        return out[0] if scalar else out

    def _hermite(self, tq, i):
        t0, t1 = self.t[i], self.t[i + 1]
        h = (t1 - t0)[:, None]
        s = ((tq - t0) / (t1 - t0))[:, None]
        y0, y1 = self.y[i], self.y[i + 1]
        d0, d1 = self.dy[i], self.dy[i + 1]
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1

    def derivative(self, tq):
        scalar = np.ndim(tq) == 0
        tq, i = self._locate(np.atleast_1d(tq))
        t0, t1 = self.t[i], self.t[i + 1]
        h = (t1 - t0)[:, None]
        s = ((tq - t0) / (t1 - t0))[:, None]
        y0, y1 = self.y[i], self.y[i + 1]
        d0, d1 = self.dy[i], self.dy[i + 1]
        dh00 = 6 * s * s - 6 * s
        dh10 = 3 * s * s - 4 * s + 1
        dh01 = -6 * s * s + 6 * s
        dh11 = 3 * s * s - 2 * s
        out = (dh00 * y0 + dh01 * y1) / h + dh10 * d0 + dh11 * d1
        return out[0] if scalar else out


@dataclass(frozen=True)
class IntegratorOptions:
    method: str = "DP45"
    abs_tol: float = 1e-10
    rel_tol: float = 1e-10
    h_fixed: Optional[float] = None

    def __post_init__(self):
        if self.method not in ("DP45", "RK4"):
            raise ValueError(f"unknown integrator {self.method!r}; use 'DP45' or 'RK4'")
        if self.abs_tol <= 0 or self.rel_tol <= 0:
            raise ValueError("tolerances must be positive")


def _guard(rhs):
    counter = [0]

    def wrapped(t, y):
        counter[0] += 1
        dy = np.asarray(rhs(t, y), dtype=float)
        if not np.all(np.isfinite(dy)):
            raise NonFiniteState(f"non-finite derivative at t={t:.6g}")
        return dy

    return wrapped, counter


def integrate(rhs: Callable, y0, span, opts: IntegratorOptions = IntegratorOptions()) -> DenseTrajectory:
    """Integrate ``y' = rhs(t, y)`` over ``span = (t0, t1)`` with ``t1 > t0``.

    Raises
    ------
    StepSizeUnderflow
        The adaptive step collapsed below floating-point spacing.
    NonFiniteState
        The right-hand side or state became non-finite.
    """
    t0, t1 = float(span[0]), float(span[1])
    if not t1 > t0:
        raise ValueError("integration span must have positive length")
    y0 = np.asarray(y0, dtype=float).ravel()
    if not np.all(np.isfinite(y0)):
        raise NonFiniteState("non-finite initial state")
    f, counter = _guard(rhs)

    if opts.method == "RK4":
        h = opts.h_fixed if opts.h_fixed else (t1 - t0) / 100
        n = max(1, int(math.ceil((t1 - t0) / h - 1e-12)))
        ts = np.linspace(t0, t1, n + 1)
        ys = np.empty((n + 1, y0.size))
        ds = np.empty_like(ys)
        ys[0] = y0
        k1 = f(t0, y0)
        for i in range(n):
            t, y, hh = ts[i], ys[i], ts[i + 1] - ts[i]
            ds[i] = k1
            k2 = f(t + hh / 2, y + hh / 2 * k1)
            k3 = f(t + hh / 2, y + hh / 2 * k2)
            k4 = f(t + hh, y + hh * k3)
            ys[i + 1] = y + hh / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(ys[i + 1])):
                raise NonFiniteState(f"non-finite state at t={ts[i + 1]:.6g}")
            k1 = f(ts[i + 1], ys[i + 1])
        ds[n] = k1
        return DenseTrajectory(ts, ys, ds, "RK4", None, None, n, 0, counter[0])

    sol = solve_ivp(f, (t0, t1), y0, method="RK45", rtol=opts.rel_tol, atol=opts.abs_tol, dense_output=True)
    if sol.status != 0:
        if "step size" in sol.message.lower():
            raise StepSizeUnderflow(sol.message)
        raise NonFiniteState(sol.message)
    ts = sol.t
    ys = sol.y.T.copy()
    ds = np.array([f(t, y) for t, y in zip(ts, ys)])
    return DenseTrajectory(ts, ys, ds, "DP45", opts.abs_tol, opts.rel_tol,
                           ts.size - 1, 0, counter[0], sol.sol)


def find_sign_change(g: Callable, span, n_scan: int = 1000):
    """Earliest bracket ``(a, b)`` on a uniform scan with ``g(a) * g(b) < 0``.

    Exact zeros on the scan are skipped over, so a crossing that lands on a
    scan point is still bracketed by its nonzero neighbours.
    """
    ts = np.linspace(float(span[0]), float(span[1]), int(n_scan))
    last_t, last_g = None, 0.0
    for t in ts:
        gt = float(g(t))
        if gt == 0.0 or not np.isfinite(gt):
            continue
        if last_t is not None and np.sign(last_g) != np.sign(gt):
            return (float(last_t), float(t))
        last_t, last_g = t, gt
    return None


def bisect(g: Callable, bracket, tol_t: float = 1e-10) -> float:
    a, b = float(bracket[0]), float(bracket[1])
    ga, gb = float(g(a)), float(g(b))
    # compare signs, not products: products of tiny values underflow to zero
    if not (np.isfinite(ga) and np.isfinite(gb)) or np.sign(ga) * np.sign(gb) >= 0:
        raise InvalidBracket(f"g({a})={ga} and g({b})={gb} do not bracket a sign change")
    while b - a > tol_t:
        mid = 0.5 * (a + b)
        if mid <= a or mid >= b:
            break
        gm = float(g(mid))
        if gm == 0.0:
            return mid
        if np.sign(gm) != np.sign(ga):
            b, gb = mid, gm
        else:
            a, ga = mid, gm
    return 0.5 * (a + b)


@dataclass(frozen=True)
class NewtonOptions:
    tol: float = 1e-10
    max_iter: int = 50
    damping: bool = True
    fd_rel_step: float = 1e-6
    min_step: float = 2.0 ** -20


@dataclass
class NewtonResult:
    z: np.ndarray
    iterations: int
    residual: float
    history: list = field(default_factory=list)


def fd_jacobian(F: Callable, z: np.ndarray, Fz: np.ndarray, rel: float = 1e-6) -> np.ndarray:
    """Forward-difference Jacobian with step ``rel * (1 + |z_i|)`` rounded to a power of two.

    A power-of-two step makes ``z + h`` and the difference exact for affine
    maps of moderate size.
    """
    J = np.empty((Fz.size, z.size))
    for i in range(z.size):
        h = 2.0 ** round(math.log2(rel * (1.0 + abs(z[i]))))
        zp = z.copy()
        zp[i] += h
        h = zp[i] - z[i]
        J[:, i] = (np.asarray(F(zp), dtype=float) - Fz) / h
    return J


def newton_solve(F: Callable, J: Optional[Callable], z0, opts: NewtonOptions = NewtonOptions()) -> NewtonResult:
    """Damped Newton for ``F(z) = 0`` with Armijo backtracking on ``|F|^2``.

    ``J`` is an analytic Jacobian provider ``J(z)``, or ``None`` for forward
    differences.  Raises :class:`MaxIterations`, :class:`SingularJacobian` or
    :class:`LineSearchFailure`, each carrying the best iterate and history.
    """
    z = np.asarray(z0, dtype=float).ravel().copy()
    Fz = np.asarray(F(z), dtype=float).ravel()
    norm = float(np.max(np.abs(Fz)))
    history = [norm]
    best = z.copy()
    for it in range(opts.max_iter + 1):
        if norm <= opts.tol:
            return NewtonResult(z, it, norm, history)
        if it == opts.max_iter:
            break
        Jz = J(z) if J is not None else fd_jacobian(F, z, Fz, opts.fd_rel_step)
        try:
            step = np.linalg.solve(Jz, -Fz)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(str(exc), best, history) from exc
        if not np.all(np.isfinite(step)):
            raise SingularJacobian("non-finite Newton step", best, history)
        merit = float(Fz @ Fz)
        alpha = 1.0
        while True:
            trial = z + alpha * step
            try:
                Ft = np.asarray(F(trial), dtype=float).ravel()
                ok = np.all(np.isfinite(Ft))
            except (LagocError, FloatingPointError):
                ok = False
            if ok and (not opts.damping or float(Ft @ Ft) <= (1 - 2e-4 * alpha) * merit):
                break
            alpha *= 0.5
            if alpha < opts.min_step:
                raise LineSearchFailure("backtracking fell below the minimum step", best, history)
        z, Fz = trial, Ft
        norm = float(np.max(np.abs(Fz)))
        history.append(norm)
        if norm <= min(history[:-1]):
            best = z.copy()
    raise MaxIterations(f"no convergence in {opts.max_iter} iterations (|F|={norm:.3e})", best, history)


def composite_simpson(y: np.ndarray, t: np.ndarray) -> float:
    """Simpson's rule on a uniform grid with an even number of intervals."""
    y = np.asarray(y, dtype=float)
    n = y.shape[0] - 1
    if n < 2 or n % 2:
        raise ValueError("Simpson's rule needs an even number of intervals")
    h = (t[-1] - t[0]) / n
    return float(h / 3 * (y[0] + y[-1] + 4 * y[1:-1:2].sum(axis=0) + 2 * y[2:-1:2].sum(axis=0)))


def signed_det(M: np.ndarray) -> float:
    """Determinant via pivoted LU; sign from permutation parity and the pivots."""
    sign, logabs = np.linalg.slogdet(np.asarray(M, dtype=float))
    if sign == 0:
        return 0.0
    return float(sign * np.exp(logabs))
