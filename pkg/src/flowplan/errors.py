"""Exception types shared across the planner."""

from __future__ import annotations


class FlowplanError(Exception):
    """Base class for all planner errors."""


class ParseError(FlowplanError):
    """Malformed input text; carries the source position and what was expected."""

    def __init__(self, message: str, line: int, column: int, expected: str | None = None):
        self.line = line
        self.column = column
        self.expected = expected
        detail = f"{message} at line {line}, column {column}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class UnsupportedConstructError(FlowplanError):
    """Input uses a construct outside the supported fragment; names the construct."""

    def __init__(self, construct: str, detail: str = ""):
        self.construct = construct
        message = f"unsupported construct: {construct}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class ValidationError(FlowplanError):
    """Domain/problem cross-reference failure (undeclared name, arity mismatch, ...)."""


class MissingInitialValueError(ValidationError):
    """A function instance is used but has no initial value."""

    def __init__(self, variable: str):
        self.variable = variable
        super().__init__(f"missing initial value for {variable}")


class GroundingError(FlowplanError):
    """Grounding produced an invalid or oversized task."""


class PreconditionError(FlowplanError):
    """An action was applied in a state violating one of its preconditions."""

    def __init__(self, action: str, condition: str):
        self.action = action
        self.condition = condition
        super().__init__(f"precondition of {action} violated: {condition}")


class SolverError(FlowplanError):
    """Mathematical-program model misuse (bad index, mismatched scratch pop, ...)."""
