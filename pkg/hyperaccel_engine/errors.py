"""Exception hierarchy for the engine.

Everything subclasses ValueError so callers that only guard against
validation failures (the Streamlit tabs, the catalog loaders) keep working.
"""

from __future__ import annotations

from typing import Any, Optional


class HyperaccelError(ValueError):
    """Base class for every engine error."""


# exact core
class DomainError(HyperaccelError):
    pass


class PoleError(HyperaccelError):
    """A denominator vanished at the requested assignment."""


class AssignmentError(HyperaccelError):
    """A free variable was left unassigned."""


class ParseError(HyperaccelError):
    pass


# series
class MalformedSeriesError(HyperaccelError):
    pass


class TooSlowError(HyperaccelError):
    """Raised when a series cannot reach the requested digits within the term cap.

    ``partial`` holds the best EvalResult reached before giving up.
    """

    def __init__(self, message: str, partial: Optional[Any] = None):
        super().__init__(message)
        self.partial = partial


class DegenerateIndexError(HyperaccelError):
    pass


# recurrences
class InadmissibleParametersError(HyperaccelError):
    pass


class CompositionError(HyperaccelError):
    pass


class NonVanishingRemainderError(HyperaccelError):
    pass


class AccelerationFailure(HyperaccelError):
    pass


# WZ
class MalformedPairError(HyperaccelError):
    pass


class UnsupportedCaseError(HyperaccelError):
    pass


# catalog
class UnknownConstantError(HyperaccelError):
    pass


class UnknownEntryError(HyperaccelError):
    pass


class CatalogValidationError(HyperaccelError):
    pass


class CatalogIntegrityError(HyperaccelError):
    """Stored library_hash disagrees with the file content."""
