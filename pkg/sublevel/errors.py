from typing import Optional


class SublevelError(Exception):
    """Base class for every error raised by sublevel."""


class InvalidMatrix(SublevelError, ValueError):
    pass


class RankTooLarge(SublevelError, ValueError):
    pass


class NotPositiveDefinite(SublevelError, ArithmeticError):
    pass


class DimensionError(SublevelError, ValueError):
    pass


class InvalidCoarseDim(SublevelError, ValueError):
    pass


class DomainViolation(SublevelError, ArithmeticError):
    """Raised when an objective is evaluated outside its domain."""


class NonFinite(SublevelError, ArithmeticError):
    pass


class CapExceeded(SublevelError, RuntimeError):
    pass


class LineSearchFailed(SublevelError, RuntimeError):
    pass


class NotDescentDirection(SublevelError, ValueError):
    pass


class SingularHessian(SublevelError, ArithmeticError):
    pass


class SingularReducedHessian(SingularHessian):
    pass


class NotApplicable(SublevelError, ValueError):
    pass


class DomainError(SublevelError, ValueError):
    """Raised when a scalar auxiliary function is called outside its domain."""


class EmptyDataset(SublevelError, ValueError):
    pass


class ParseError(SublevelError, ValueError):
    """Malformed LIBSVM input.

    Args:
        line (int): 1-based line number of the offending line.
        column (int): 1-based character column of the offending token.
        reason (str): Human readable description.
    """

    def __init__(self, line: int, column: int, reason: str):
        super().__init__(f"line {line}, column {column}: {reason}")
        self.line = line
        self.column = column
        self.reason = reason


class ConfigError(SublevelError, ValueError):
    """Invalid experiment configuration; `field` names the offending entry."""

    def __init__(self, field: str, reason: str, section: Optional[str] = None):
        where = f"[{section}] {field}" if section else field
        super().__init__(f"{where}: {reason}")
        self.field = field
        self.section = section
