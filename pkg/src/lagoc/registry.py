"""Built-in demo problems, addressable by name."""

from __future__ import annotations

import numpy as np

from .lq import LQProblem, to_generic
from .problem import BoundaryData, Dims, DifferentiableMap, SecondOrderOCP


def _z(*shape):
    return np.zeros(shape)


def double_integrator(boundary: BoundaryData | None = None) -> SecondOrderOCP:
    """``qddot = u``, ``C = u^2 / 2``; rest-to-rest from 0 to 1 in unit time."""
    if boundary is None:
        boundary = BoundaryData([0.0], [0.0], [1.0], [0.0], 1.0)
    cost = DifferentiableMap(
        fun=lambda q, v, u: 0.5 * float(u @ u),
        grad=lambda q, v, u: (_z(1), _z(1), np.array(u, dtype=float)),
        hess=lambda q, v, u: {"qq": _z(1, 1), "qv": _z(1, 1), "qu": _z(1, 1),
                              "vv": _z(1, 1), "vu": _z(1, 1), "uu": np.eye(1)},
        scalar=True,
    )
    dynamics = DifferentiableMap(
        fun=lambda q, v, u: np.array(u, dtype=float),
        grad=lambda q, v, u: (_z(1, 1), _z(1, 1), np.eye(1)),
        hess=lambda q, v, u: {k: _z(1, 1, 1) for k in ("qq", "qv", "qu", "vv", "vu", "uu")},
        hess_weighted=lambda q, v, u, w: {k: _z(1, 1) for k in ("qq", "qv", "qu", "vv", "vu", "uu")},
    )
    return SecondOrderOCP(Dims(1, 1), cost, dynamics, boundary, "double_integrator")


def beam_lq(boundary: BoundaryData | None = None) -> LQProblem:
    """Minimum effort with a rewarded excursion: ``C = (u^2 - q^2) / 2``, ``qddot = u``.

    Jacobi fields satisfy ``q'''' = q``; the first conjugate time is the
    first positive root of ``cos(t) cosh(t) = 1``.
    """
    if boundary is None:
        boundary = BoundaryData([0.0], [0.0], [1.0], [0.0], 6.0)
    one = np.ones((1, 1))
    return LQProblem(-one, 0 * one, one, 0 * one, 0 * one, one, boundary)


def min_effort_beam(boundary: BoundaryData | None = None) -> SecondOrderOCP:
    return to_generic(beam_lq(boundary), "min_effort_beam")


def forced_pendulum(boundary: BoundaryData | None = None) -> SecondOrderOCP:
    """``qddot = -sin q + u``, ``C = (u^2 + q^2) / 2``."""
    if boundary is None:
        boundary = BoundaryData([1.0], [0.0], [0.0], [0.0], 2.0)
    cost = DifferentiableMap(
        fun=lambda q, v, u: 0.5 * float(u @ u + q @ q),
        grad=lambda q, v, u: (np.array(q, dtype=float), _z(1), np.array(u, dtype=float)),
        hess=lambda q, v, u: {"qq": np.eye(1), "qv": _z(1, 1), "qu": _z(1, 1),
                              "vv": _z(1, 1), "vu": _z(1, 1), "uu": np.eye(1)},
        scalar=True,
    )

    def hess(q, v, u):
        out = {k: _z(1, 1, 1) for k in ("qv", "qu", "vv", "vu", "uu")}
        out["qq"] = np.sin(q).reshape(1, 1, 1)
        return out

    def hess_weighted(q, v, u, w):
        out = {k: _z(1, 1) for k in ("qv", "qu", "vv", "vu", "uu")}
        out["qq"] = (w * np.sin(q)).reshape(1, 1)
        return out

    dynamics = DifferentiableMap(
        fun=lambda q, v, u: -np.sin(q) + u,
        grad=lambda q, v, u: (np.diag(-np.cos(q)), _z(1, 1), np.eye(1)),
        hess=hess,
        hess_weighted=hess_weighted,
    )
    return SecondOrderOCP(Dims(1, 1), cost, dynamics, boundary, "forced_pendulum")


REGISTRY = {
    "double_integrator": double_integrator,
    "min_effort_beam": min_effort_beam,
    "forced_pendulum": forced_pendulum,
}


def get_problem(name: str, boundary: BoundaryData | None = None) -> SecondOrderOCP:
    try:
        factory = REGISTRY[name]
    except KeyError:
        raise KeyError(f"unknown problem {name!r}; known: {', '.join(sorted(REGISTRY))}") from None
    return factory(boundary)
