"""Exception hierarchy."""


class FilippovError(Exception):
    """Base class for all errors raised by this package."""


class EvaluationError(FilippovError, ArithmeticError):
    """A vector field or surface function produced a non-finite value."""

    def __init__(self, message, coordinate=None):
        super().__init__(message)
        self.coordinate = coordinate


class JetError(FilippovError, ArithmeticError):
    """Truncated-Taylor arithmetic hit an undefined operation."""


class UnknownModelError(FilippovError, KeyError):
    pass


class UnknownParameterError(FilippovError, KeyError):
    pass


class SamplingError(FilippovError):
    """Not enough points of the discontinuity surface were found in budget."""


class NotOnSurfaceError(FilippovError, ValueError):
    """A point required to lie on the discontinuity or tangency surface does not."""


class DegeneracyError(FilippovError):
    """A denominator of a sliding field (or similar ratio) vanished."""


class RegionError(FilippovError, ValueError):
    """A point lies in the wrong kind of region for the requested quantity."""


class NoReturnError(FilippovError):
    """An orbit failed to come back to the discontinuity surface within budget."""


class InsufficientDataError(FilippovError):
    """Too few usable samples remain for a fit."""


class StepFailure(FilippovError):
    """The integrator could not make progress (step-size underflow, NaNs)."""
