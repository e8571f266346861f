"""Domain errors raised by the numerical services.

Each error carries the process exit code the CLI maps it to: 1 for bad input
or configuration, 2 for numerical failures.
"""
from typing import Optional


class WasserstatError(Exception):
    """Base class for every error the library raises on purpose."""

    exit_code: int = 2

    @property
    def name(self) -> str:
        return type(self).__name__


class InvalidInput(WasserstatError):
    exit_code = 1


class ParseError(InvalidInput):
    """Malformed CSV input, located by 1-based row and column."""

    def __init__(self, message: str, row: Optional[int] = None, column: Optional[int] = None):
        self.row = row
        self.column = column
        location = ""
        if row is not None:
            location = f" (row {row}" + (f", column {column})" if column is not None else ")")
        super().__init__(f"{message}{location}")


class UnsupportedShape(WasserstatError):
    exit_code = 1


class SingularMatrix(WasserstatError):
    def __init__(self, message: str, condition_number: float = float("inf")):
        self.condition_number = condition_number
        super().__init__(f"{message} (condition number {condition_number:.3e})")


class OutsideSupport(WasserstatError):
    pass


class LineSearchFailure(WasserstatError):
    pass


class DegenerateEstimate(WasserstatError):
    pass
