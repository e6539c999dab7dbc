"""Exception hierarchy shared by the numerical layers."""


class LagocError(Exception):
    """Base class for every error raised by this package."""


class NumericsError(LagocError):
    pass


class StepSizeUnderflow(NumericsError):
    pass


class NonFiniteState(NumericsError):
    pass


class InvalidBracket(NumericsError):
    pass


class MaxIterations(NumericsError):
    """Iteration budget exhausted.

    ``best`` holds the best iterate seen and ``history`` the residual norms.
    """

    def __init__(self, message, best=None, history=None):
        super().__init__(message)
        self.best = best
        self.history = list(history or [])


class SingularJacobian(NumericsError):
    def __init__(self, message, best=None, history=None):
        super().__init__(message)
        self.best = best
        self.history = list(history or [])


class LineSearchFailure(NumericsError):
    def __init__(self, message, best=None, history=None):
        super().__init__(message)
        self.best = best
        self.history = list(history or [])


class SingularHessian(LagocError):
    """The control Hessian of the new Lagrangian is not invertible."""


class ControlEliminationError(LagocError):
    """Newton on the optimality equation did not converge."""


class NoConvergence(LagocError):
    """Shooting failed; carries the best initial covector and residual history."""

    def __init__(self, message, best=None, history=None, residual=None):
        super().__init__(message)
        self.best = best
        self.history = list(history or [])
        self.residual = residual


class LegendreViolation(LagocError):
    """Strong Legendre condition fails along the extremal."""
