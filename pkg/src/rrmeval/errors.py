"""Exception types and the validation-violation record shared across modules."""

from __future__ import annotations

from dataclasses import dataclass


class RRMEvalError(Exception):
    """Base class for all package errors."""


class InvalidInputError(RRMEvalError, ValueError):
    """An argument is malformed (non-finite value, wrong dimension, empty set...)."""


class ParseError(RRMEvalError):
    """A file could not be parsed. ``problems`` carries per-line/field details."""

    def __init__(self, message: str, problems: list[Violation] | None = None):
        super().__init__(message)
        self.problems = list(problems or [])


class ModelValidationError(RRMEvalError):
    """A model or data set failed validation."""

    def __init__(self, message: str, violations: list[Violation] | None = None):
        super().__init__(message)
        self.violations = list(violations or [])


@dataclass(frozen=True)
class Violation:
    """One problem found by a ``validate_*`` function.

    ``code`` is a stable machine token (``"dangling-metric"``, ``"range"``, ...),
    ``where`` locates the problem (node id, ``line 12``, ``criterion 1``...).
    ``margin`` is the signed amount by which a numeric constraint is missed, if any.
    """

    code: str
    where: str
    message: str
    margin: float | None = None

    def __str__(self) -> str:
        return f"[{self.code}] {self.where}: {self.message}"
