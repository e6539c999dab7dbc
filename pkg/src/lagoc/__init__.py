"""
lagoc: second-order optimal control through a regular control Lagrangian.

Extremals are computed by shooting on the Euler-Lagrange flow of
``L = v_kappa . v_q + kappa . f - C``; optimality is decided by conjugate
times found in both the Hamiltonian and the Lagrangian variational systems.
"""

from .conjugate import ConjugateReport, optimality_verdict, propagate_bundle
from .control import eliminate_control, legendre_check
from .errors import LagocError, LegendreViolation, NoConvergence
from .lq import LQProblem, to_generic
from .problem import BoundaryData, DifferentiableMap, Dims, SecondOrderOCP, validate
from .registry import REGISTRY, get_problem
from .shooting import Extremal, ShootingOptions, solve

__version__ = "0.1.0"

__all__ = [
    "BoundaryData",
    "ConjugateReport",
    "DifferentiableMap",
    "Dims",
    "Extremal",
    "LQProblem",
    "LagocError",
    "LegendreViolation",
    "NoConvergence",
    "REGISTRY",
    "SecondOrderOCP",
    "ShootingOptions",
    "eliminate_control",
    "get_problem",
    "legendre_check",
    "optimality_verdict",
    "propagate_bundle",
    "solve",
    "to_generic",
    "validate",
]
