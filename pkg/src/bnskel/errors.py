"""Exception hierarchy shared across the package."""


class BnskelError(Exception):
    """Base class for all package errors."""


class ValidationError(BnskelError, ValueError):
    """A network, sample, or configuration violates an invariant."""


class ParseError(BnskelError, ValueError):
    """A file could not be parsed; message carries the offending location."""


class CyclicGraph(ValidationError):
    pass


class InvalidRange(ValidationError):
    pass


class OutOfRange(ValidationError):
    pass


class UnknownNode(ValidationError, KeyError):
    pass


class TooLarge(BnskelError):
    """Exact enumeration would exceed the configured configuration cap."""


class ShapeMismatch(ValidationError):
    pass


class UnsupportedPair(ValidationError):
    pass


class NotSquare(ValidationError):
    pass


class NotPositiveDefinite(BnskelError, ArithmeticError):
    pass


class AlphaOutOfRange(ValidationError):
    pass


class NodeMismatch(ValidationError):
    pass


class EmptySupport(BnskelError):
    pass


class NotConverged(BnskelError):
    """Solver stopped at ``max_iter`` without meeting the KKT tolerance."""

    def __init__(self, result, message=None):
        self.result = result
        super().__init__(
            message
            or f"solver did not converge after {result.iterations} iterations "
            f"(kkt residual {result.kkt_residual:.3e})"
        )
