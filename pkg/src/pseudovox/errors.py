"""Exception hierarchy shared across the package.

Parse-time errors carry the 1-based line number of the first offending line
when raised by a file parser; the same classes are raised without a line
number by in-memory validation.
"""

from __future__ import annotations


class PseudovoxError(Exception):
    """Base class for every error raised by this package."""


class NoVoicedFramesError(PseudovoxError):
    """A contour contains no voiced (nonzero) frames."""


class DegenerateSourceStatsError(PseudovoxError):
    """Source log-F0 spread is zero while the target asks for nonzero spread."""


class EmptySpeakerSetError(PseudovoxError):
    """A speaker-set aggregate was requested over zero speakers."""


class ZeroVectorError(PseudovoxError):
    """An all-zero vector where a direction is required."""


class EmptyAfterFilterError(PseudovoxError):
    """No pool speakers survive the gender filter."""


class PoolTooSmallError(PseudovoxError):
    """Fewer candidates than the selection size asks for."""


class EmptyPopulationError(PseudovoxError):
    """A metric needs both target and nontarget scores to be non-empty."""


class InvalidSpecError(PseudovoxError):
    """A configuration object violates its own invariants."""


class _LineError(PseudovoxError):
    """Error that may be tied to a specific input line (1-based)."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class LineSyntaxError(_LineError):
    """Input line does not match the format grammar."""


class InvalidValueError(_LineError):
    """A field parses but its value is out of domain."""


class DimensionMismatchError(_LineError):
    """Vector or matrix dimensions disagree."""
