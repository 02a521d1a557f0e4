"""Exception and warning classes raised by dampedodc."""


class ODCError(Exception):
    """Base class for all errors raised by this package."""


class SolverFailure(ODCError):
    """A dense numerical kernel (eigenvalues, linear solve) failed."""


class InfeasibleSolveError(ODCError):
    """A Lyapunov equation was posed with an unstable coefficient matrix."""


class InstabilityError(ODCError):
    """The closed loop is not stable, so the cost is undefined.

    The offending spectral abscissa is kept on ``abscissa``.
    """

    def __init__(self, message, abscissa=None):
        super().__init__(message)
        self.abscissa = abscissa


class PreconditionError(ODCError, ValueError):
    """An argument violates a documented precondition."""


class UnsupportedDegreeError(PreconditionError):
    pass


class LineSearchStall(ODCError):
    """Backtracking exhausted its budget without an acceptable step."""


class UnsupportedStructureError(ODCError):
    """The direction matrix is not one of the forms with a known construction."""


class NotACounterexampleError(ODCError):
    """The direction is a nonpositive multiple of the identity, so no
    stable matrix can be destabilized along it."""


class SearchFailure(ODCError):
    """A parameter scan did not find the requested stable/unstable pair."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = trace


class AlphaTooSmallError(ODCError):
    """A sampled controller is not stabilizing at the requested damping."""


class ConfigError(ODCError, ValueError):
    """Malformed experiment configuration."""


class ConditioningWarning(UserWarning):
    """A linear solve was numerically ill conditioned."""
