"""Exception hierarchy shared by all modules."""


class FracGreenError(Exception):
    """Base class for package errors."""


class ConfigurationError(FracGreenError, ValueError):
    """Invalid parameters, inconsistent inputs or violated preconditions."""


class DomainError(FracGreenError, ValueError):
    """Argument outside the domain of an operation (e.g. kernel at the origin)."""


class NumericFailure(FracGreenError, ArithmeticError):
    """A quadrature or iteration did not reach its tolerance.

    Attributes
    ----------
    achieved : float or None
        Best error estimate reached before giving up.
    """

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class NonConvergence(NumericFailure):
    """Conjugate gradient exhausted its iteration budget."""

    def __init__(self, message, achieved=None, residual_history=()):
        super().__init__(message, achieved)
        self.residual_history = list(residual_history)


class AssemblyError(NumericFailure):
    """Operator failed a structural check (negative curvature in CG)."""


class StageFailure(NumericFailure):
    """A stage of the exhaustion pipeline failed; carries the partial report."""

    def __init__(self, message, stage, partial_report=None, cause=None):
        super().__init__(message)
        self.stage = stage
        self.partial_report = partial_report
        self.cause = cause
