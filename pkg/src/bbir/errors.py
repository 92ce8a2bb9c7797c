"""Exception hierarchy shared by all modules.

The CLI maps each class to a distinct exit code, so raise the most specific one.
"""


class BBIRError(Exception):
    """Base class for package errors."""


class ParseError(BBIRError, ValueError):
    """Malformed input text (Touchstone, CSV, tap file, config)."""


class ValidationError(BBIRError, ValueError):
    """Well-formed input that violates a data invariant or precondition."""


class NumericalError(BBIRError, ArithmeticError):
    """Ill-conditioned or unreachable numerical problem."""
