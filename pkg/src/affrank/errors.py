"""Exception hierarchy shared by every module."""
from __future__ import annotations


class AffrankError(Exception):
    """Base class for library errors."""


class FieldMismatchError(AffrankError, ValueError):
    pass


class DivisionByZeroError(AffrankError, ZeroDivisionError):
    pass


class ShapeMismatchError(AffrankError, ValueError):
    pass


class SingularMatrixError(AffrankError, ValueError):
    pass


class InvalidSpecError(AffrankError, ValueError):
    pass


class BudgetExceededError(AffrankError):
    """An exhaustive computation would exceed its budget.

    ``upper_bound`` carries the best value seen on a sample, when the
    caller asked for a minimum (lower rank); it is never returned as a result.
    """

    def __init__(self, message: str, *, needed: int | None = None, budget: int | None = None,
                 upper_bound: int | None = None):
        super().__init__(message)
        self.needed = needed
        self.budget = budget
        self.upper_bound = upper_bound


class InconclusiveError(AffrankError):
    """A witness search stopped on its budget before exhausting the search space."""


class NotExtremalError(AffrankError, ValueError):
    """Input fails a precondition (wrong codimension or lower rank)."""


class TheoremFalsifiedError(AffrankError):
    """A proven statement failed on concrete data; ``dump`` holds a reproducible record."""

    def __init__(self, message: str, dump: dict | None = None):
        super().__init__(message)
        self.dump = dump or {}
