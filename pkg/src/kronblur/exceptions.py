"""Exception types shared across the package."""


class KronblurError(Exception):
    """Base class for errors raised by this package."""


class ValidationError(KronblurError, ValueError):
    """An input failed a shape, dtype, or value check."""


class NumericalError(KronblurError, ArithmeticError):
    """A computation produced non-finite values or lost rank."""


class RankDeficiencyError(NumericalError):
    """A column collapsed during orthonormalization.

    Carries the index of the offending column so callers can report
    exactly where the basis degenerated.
    """

    def __init__(self, column: int, message: str | None = None):
        self.column = column
        if message is None:
            message = f"column {column} became numerically zero during orthonormalization"
        super().__init__(message)
