"""Exception hierarchy shared by all solver components."""


class AcceloptError(Exception):
    """Base class for all package errors."""


class EvaluationError(AcceloptError):
    """An oracle returned a non-finite value or failed to evaluate."""


class UnsupportedOrderError(AcceloptError):
    """A derivative order beyond the oracle's capability was requested."""


class WrongRegimeError(AcceloptError):
    """A subsolver was called outside its (order, power) regime."""


class CapabilityError(AcceloptError):
    """The requested combination has no shipped closed-form solver."""


class InnerSolverError(AcceloptError):
    """The inner iterative subsolver failed to reach its tolerance."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ScalarSolveError(AcceloptError):
    """A one-dimensional root solve failed to converge."""


class BracketingError(AcceloptError):
    """No bracket for the coupling-coefficient search could be found.

    On a stationary input this signals convergence rather than failure.
    """


class InvalidConfigError(AcceloptError):
    """Configuration values violate a documented constraint."""


class ParseError(AcceloptError):
    """Malformed input data; carries the 1-based line number."""

    def __init__(self, message, line_no):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class IntegrationBlowupError(AcceloptError):
    """The ODE state became non-finite; carries the last finite time."""

    def __init__(self, message, last_time):
        super().__init__(message)
        self.last_time = last_time
