"""
Errors raised by Heron.

Every library failure derives from HeronError so callers (and the CLI runner)
can catch the family in one place.
"""
from typing import Optional


class HeronError(Exception):
    """Base class for all Heron errors."""

    status = "error"


class ChartExcluded(HeronError):
    """A direction falls inside the exclusion cap around the south pole."""

    status = "chart-excluded"


class DegenerateInput(HeronError):
    """Input data leaves the requested quantity underdetermined."""

    status = "degenerate-input"


class OutOfDomain(HeronError):
    """A surface parameter lies outside the declared parameter rectangle."""

    status = "out-of-domain"


class NotIncident(HeronError):
    """An incoming line does not pass through the reflection point."""

    status = "not-incident"


class SolverFailure(HeronError):
    """Root search did not converge and could not certify an empty result."""

    status = "solver-failure"


class ParseError(HeronError):
    """Scene file could not be parsed or validated."""

    status = "parse-error"

    def __init__(self, message: str, line: Optional[int] = None, field: Optional[str] = None):
        self.line = line
        self.field = field
        location = []
        if line is not None:
            location.append(f"line {line}")
        if field:
            location.append(f"field '{field}'")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
