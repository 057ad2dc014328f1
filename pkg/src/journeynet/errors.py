"""Exception types shared across the package."""

from __future__ import annotations


class JourneyNetError(Exception):
    """Base class for all journeynet errors."""


# -- geometry ---------------------------------------------------------------


class DegenerateBoundary(JourneyNetError):
    """A boundary ring has fewer than 3 distinct vertices."""


class MissingRegion(JourneyNetError):
    """A requested region id is not present in the boundary table."""


# -- network ----------------------------------------------------------------


class UnknownRegion(JourneyNetError):
    """An event references a region id outside the known region set."""


class EmptyNetwork(JourneyNetError):
    """An operation requires at least one directed edge."""


# -- temporal ---------------------------------------------------------------


class TooFewWindows(JourneyNetError):
    """Temporal correlation needs at least two time windows."""


class MissingInterval(JourneyNetError):
    """A discordant region pair has no precomputed distance interval."""


# -- survival ---------------------------------------------------------------


class EmptySample(JourneyNetError):
    """A censored sample contains no intervals."""


# -- stats ------------------------------------------------------------------


class DegenerateSample(JourneyNetError):
    """A sample is too small for the requested test."""


class InvalidP(JourneyNetError):
    """A p-value lies outside (0, 1]."""


class DegenerateTable(JourneyNetError):
    """A contingency table has a non-positive row or column sum."""


class DegenerateGroup(JourneyNetError):
    """A group has fewer than 2 values."""


class TooShort(JourneyNetError):
    """A series is too short for trend testing."""


# -- analysis ---------------------------------------------------------------


class TooFewPoints(JourneyNetError):
    """A regression needs at least 3 points."""


class KTooLarge(JourneyNetError):
    """Requested top-k exceeds the number of scored regions."""


class MissingAttributes(JourneyNetError):
    """A selected region has no attribute record."""


class EmptyAfterFilter(JourneyNetError):
    """No regions survive the coverage threshold."""


# -- ingest / synth ---------------------------------------------------------


class ParseError(JourneyNetError):
    """A malformed input row.

    Carries enough context to locate the offending cell.
    """

    def __init__(self, path: str, row: int, column: str, reason: str):
        self.path = path
        self.row = row
        self.column = column
        self.reason = reason
        super().__init__(f"{path}:{row} column {column!r}: {reason}")


class IntegrityError(JourneyNetError):
    """An event references a region with no attribute or boundary record."""


class InvalidConfig(JourneyNetError):
    """A generator configuration violates its invariants."""
