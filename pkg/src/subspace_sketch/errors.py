"""Exception hierarchy shared by every module of the package."""


class SketchError(Exception):
    """Base class for all package errors."""


class RejectedInputError(SketchError, ValueError):
    """Arguments violate a documented precondition (shape, range, etc.)."""


class DegenerateInputError(SketchError, ValueError):
    """Input is rank deficient or otherwise numerically degenerate.

    ``column`` holds the offending column index when one is known.
    """

    def __init__(self, message, column=None):
        super().__init__(message)
        self.column = column


class DegenerateGeometryError(SketchError, ValueError):
    """A geometric construction is undefined for the given configuration."""


class DegenerateSketchError(SketchError, ArithmeticError):
    """A sketch collapsed the rank of a subspace.

    The seed that produced the operator is kept for reproduction.
    """

    def __init__(self, message, seed=None):
        super().__init__(message)
        self.seed = seed


class NumericalFailureError(SketchError, ArithmeticError):
    """An iterative method failed to converge."""

    def __init__(self, message, residual=None):
        super().__init__(message)
        self.residual = residual


class CalibrationMismatchError(RejectedInputError):
    """A calibration was fitted for a different band width than requested."""


class UnreliableCalibrationError(RejectedInputError):
    """A calibration's fit is too poor (or empty) to plan with."""


class FormatError(SketchError, ValueError):
    """A file could not be parsed as the expected format."""
