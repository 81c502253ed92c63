"""Exception and warning types raised by popreplace."""


class PopReplaceError(Exception):
    """Base class for all library errors."""


class InvalidParams(PopReplaceError, ValueError):
    """A parameter set violates a model invariant.

    ``violations`` lists the names of the failed checks.
    """

    def __init__(self, message, violations=()):
        super().__init__(message)
        self.violations = tuple(violations)


class DomainError(PopReplaceError, ValueError):
    pass


class BlowUp(PopReplaceError, ArithmeticError):
    """The state left its admissible range by more than the tolerance."""


class StepFailure(PopReplaceError, ArithmeticError):
    pass


class SpanMismatch(PopReplaceError, ValueError):
    pass


class NoInteriorZero(PopReplaceError):
    pass


class NonUniquePeriodic(PopReplaceError):
    pass


class SingularWeight(PopReplaceError, ZeroDivisionError):
    pass


class OutOfRange(PopReplaceError, ValueError):
    """A requested cost exceeds the resolvable range of the potential.

    ``saturated`` carries the value a saturating caller should use
    (``1 - delta``).
    """

    def __init__(self, message, saturated=None):
        super().__init__(message)
        self.saturated = saturated


class NoFeasibleC(PopReplaceError):
    pass


class PreconditionFailed(PopReplaceError, ValueError):
    pass


class Infeasible(PopReplaceError):
    pass


class ConfigError(PopReplaceError, ValueError):
    pass


class TangentZeroWarning(UserWarning):
    """Phi touches zero on the grid without changing sign."""
