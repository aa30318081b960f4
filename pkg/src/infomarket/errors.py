"""Exception types raised by the engine."""

from __future__ import annotations

from typing import Any


class InfoMarketError(Exception):
    """Base class for all engine errors."""


class EvidenceImpossible(InfoMarketError):
    """Conditioning on an event of zero prior mass."""


class InconsistentGoods(InfoMarketError):
    """Goods whose realized values cannot hold jointly, or disagree with the true outcome."""


class BudgetExceeded(InfoMarketError):
    def __init__(self, count: int, budget: int, what: str = "protocols"):
        self.count = count
        self.budget = budget
        super().__init__(f"{count} {what} exceeds budget of {budget}")


class ViolationFound(InfoMarketError):
    """A verification suite found an instance breaking the checked inequality.

    ``scenario`` holds a JSON-serializable description of the offending instance.
    """

    def __init__(self, message: str, scenario: Any = None):
        self.scenario = scenario
        super().__init__(message)


class ParseError(InfoMarketError):
    def __init__(self, message: str, field: str | None = None, line: int | None = None):
        self.field = field
        self.line = line
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class FixtureViolation(InfoMarketError):
    def __init__(self, assertion: str, expected: Any, actual: Any):
        self.assertion = assertion
        self.expected = expected
        self.actual = actual
        super().__init__(f"fixture assertion {assertion!r} failed: expected {expected}, got {actual}")
