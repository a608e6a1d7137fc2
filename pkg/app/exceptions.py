"""
Exception hierarchy.

Every domain error derives from :class:`QfpError`, itself a ``ValueError``,
so the HTTP layer and the CLI can map them in one place.
"""

from __future__ import annotations


class QfpError(ValueError):
    """Base class for invalid input to the toolkit."""


class GridMismatchError(QfpError):
    """Transforms built on different frequency grids were combined."""


class WindowError(QfpError):
    """A bin, state or sampling choice does not fit the simulation window."""


class BinAssignmentError(QfpError):
    """Computational bins of a transform disagree with a target assignment."""


class DegenerateResultError(QfpError):
    """A ratio is undefined because its denominator vanished."""


class NotDiscriminableError(QfpError):
    """Accuracy was requested for a Bell state the analyzer cannot identify."""


class ConfigError(QfpError):
    """A problem, params or solution document is malformed."""

    @classmethod
    def from_validation(cls, source: str, exc: Exception) -> "ConfigError":
        """Flatten a pydantic ``ValidationError`` into a message naming the fields."""
        errors = getattr(exc, "errors", None)
        if errors is None:
            return cls(f"{source}: {exc}")
        parts = []
        for err in errors():
            loc = ".".join(str(p) for p in err.get("loc", ())) or "<root>"
            parts.append(f"{loc}: {err.get('msg', 'invalid value')}")
        return cls(f"{source}: " + "; ".join(parts))
