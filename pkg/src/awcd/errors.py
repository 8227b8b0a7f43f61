"""Exception hierarchy shared by every awcd module."""


class AwcdError(Exception):
    """Base class for all errors raised by awcd."""


class ParameterError(AwcdError, ValueError):
    """An argument is outside its valid range."""


class NumericalFailure(AwcdError, ArithmeticError):
    """A linear-algebra routine failed. The offending matrix is kept on ``.matrix``."""

    def __init__(self, message, matrix=None):
        super().__init__(message)
        self.matrix = matrix


class DegenerateMatrixError(NumericalFailure):
    """Eigenvalue sums fell below the positivity floor."""


class DomainError(AwcdError, ValueError):
    """The operation is undefined for inputs of this shape."""


class ParseError(AwcdError):
    """A point-cloud file could not be parsed.

    ``line`` is set for text formats and ``offset`` (bytes) for binary ones.
    """

    def __init__(self, message, path=None, line=None, offset=None):
        super().__init__(message)
        self.path = path
        self.line = line
        self.offset = offset


class EmptyInputError(AwcdError, ValueError):
    """A point cloud with no points was given where points are required."""


class DegenerateHistogramError(AwcdError):
    """No threshold can be read from the histogram (all values equal).

    Pass an explicit ``rho0`` to skip adaptive selection.
    """


class UndefinedMetricError(AwcdError, ZeroDivisionError):
    """A benchmark metric has an empty denominator."""
