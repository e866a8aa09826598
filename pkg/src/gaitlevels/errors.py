"""Exception hierarchy shared by every stage of the pipeline."""

from __future__ import annotations


class GaitLevelsError(Exception):
    """Base class; the CLI maps any subclass to a nonzero exit."""


# ingest
class EmptyFile(GaitLevelsError):
    pass


class MissingColumn(GaitLevelsError):
    def __init__(self, name: str):
        super().__init__(f"missing required column {name!r}")
        self.name = name


class BadLabel(GaitLevelsError):
    def __init__(self, row: int, column: str, value: str, allowed):
        allowed = tuple(allowed)
        super().__init__(
            f"row {row}: invalid {column} {value!r}; allowed: {', '.join(allowed)}"
        )
        self.row = row
        self.column = column
        self.value = value
        self.allowed = allowed


class NonNumeric(GaitLevelsError):
    def __init__(self, row: int, column: str, value: str, reason: str = "not a finite number"):
        super().__init__(f"row {row}: column {column!r} value {value!r} is {reason}")
        self.row = row
        self.column = column
        self.value = value


class DuplicateId(GaitLevelsError):
    pass


class EmptyAfterFilter(GaitLevelsError):
    pass


# preprocess / level 1
class EmptyColumn(GaitLevelsError):
    pass


class DivisionByZeroError(GaitLevelsError, ZeroDivisionError):
    pass


# level 2
class TooFewPoints(GaitLevelsError):
    pass


# level 3
class KTooLarge(GaitLevelsError):
    pass


class FitDiverged(GaitLevelsError):
    pass


class NonFinite(GaitLevelsError):
    pass


# dissociation
class MissingCondition(GaitLevelsError):
    pass


class SessionMismatch(GaitLevelsError):
    pass


class ShapeMismatch(GaitLevelsError):
    pass


# synth / config
class InvalidSpec(GaitLevelsError):
    pass


class ConfigError(GaitLevelsError):
    pass
