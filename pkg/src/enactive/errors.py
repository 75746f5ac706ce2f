"""Exception hierarchy shared by every module."""

from __future__ import annotations


class EnactiveError(Exception):
    """Base class for all errors raised by this package."""


class BudgetError(EnactiveError):
    """An exhaustive enumeration would exceed a configured limit."""


class CapExceededError(BudgetError):
    """A state, program or statement cap was exceeded."""


class InvalidStatementError(EnactiveError, ValueError):
    pass


class IndexOutOfRangeError(EnactiveError, IndexError):
    pass


class InvalidTaskError(EnactiveError, ValueError):
    def __init__(self, violations: list[str]):
        self.violations = list(violations)
        super().__init__("; ".join(self.violations))


class LanguageMismatchError(EnactiveError, ValueError):
    pass


class EmptyExtensionError(EnactiveError, ValueError):
    pass


class NoOutputError(EnactiveError):
    pass


class NoCorrectPolicyError(EnactiveError):
    pass


class PreconditionError(EnactiveError, ValueError):
    pass


class SamplingExhaustedError(EnactiveError):
    pass


class DuplicateSelfError(EnactiveError):
    pass


class DepthExceededError(EnactiveError):
    pass


class UnknownOrganismError(EnactiveError, KeyError):
    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown organism"


class ScenarioError(EnactiveError):
    def __init__(self, message: str, step: int | None = None, organism: str | None = None):
        self.step = step
        self.organism = organism
        where = []
        if step is not None:
            where.append(f"step {step}")
        if organism is not None:
            where.append(f"organism {organism!r}")
        prefix = f"[{', '.join(where)}] " if where else ""
        super().__init__(prefix + message)


class UnknownScenarioError(ScenarioError):
    pass


class DocumentError(EnactiveError):
    """Malformed input document; carries a 1-based line/column when known."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        loc = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + loc)
