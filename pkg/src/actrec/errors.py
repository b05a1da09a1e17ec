"""Shared exception types.

Validation failures subclass ValueError, lookup failures subclass
LookupError, so callers can catch either the specific type or the
builtin family.
"""

from __future__ import annotations


class ConstraintViolation(ValueError):
    """A probability-mass or axiom constraint was breached.

    ``violations`` holds one ``(key, detail)`` pair per offending group
    or row, e.g. ``(("11067", "LAP"), 1.1)`` for an overfull key group.
    """

    def __init__(self, message: str, violations: list[tuple] | None = None):
        super().__init__(message)
        self.violations = violations or []


class MalformedCode(ValueError):
    """A code string could not be parsed (non-digit or out-of-range digit)."""


class SchemaMismatch(ValueError):
    """A row does not conform to its relation's schema."""


class UnknownRelation(LookupError):
    """A named relation does not exist in the store."""


class UnknownView(LookupError):
    """A named view does not exist in the store."""


class CycleDetected(ValueError):
    """Registering a view would create a dependency cycle."""


class EmptyTrainingSet(ValueError):
    """Axiom learning was invoked with no joined training instances."""


class GapInTiling(ValueError):
    """Segments do not tile their serial's instance range."""


class InstanceMismatch(ValueError):
    """Prediction and truth relations do not cover the same instances."""


class InvalidConfig(ValueError):
    """A configuration value is out of range or inconsistent."""
