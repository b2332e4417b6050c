"""Exception types raised by tpcurve."""


class TPCurveError(Exception):
    """Base class for all library errors."""


class ValidationError(TPCurveError, ValueError):
    """Invalid input: a parameter out of range, a malformed curve or file."""


class ResolutionError(ValidationError):
    """A requested scale or window is below the grid resolution."""


class NumericalError(TPCurveError, ArithmeticError):
    """A computation could not be carried out reliably at this resolution."""


class TangentError(NumericalError):
    """Central difference vanished; the tangent is not resolvable on the grid."""
