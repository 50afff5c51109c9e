"""Exception taxonomy for the pipeline.

Parsers raise ParseError subclasses; stage-level operations translate them
into the coarser stage errors (InfoTypesFailed, AnnotationFailed, ...) after
the format-reminder retry has been spent.
"""

from __future__ import annotations


class DstgenError(Exception):
    """Base class for every error raised by this package."""


# --- gateway ---------------------------------------------------------------

class TransportError(DstgenError):
    """Network or retryable-HTTP failure that survived all retries."""


class BackendRefusal(DstgenError):
    """Non-retryable semantic error from the completion backend."""


class FixtureMissing(DstgenError):
    """The scripted mock has no fixture for a requested (template, digest)."""


class TemplateError(DstgenError):
    """A prompt template could not be rendered (unknown id, missing binding)."""


# --- parsing ---------------------------------------------------------------

class ParseError(DstgenError):
    """A completion did not match the expected structured format."""


class EmptyParse(ParseError):
    """No items could be recovered from the completion."""


class MalformedBlock(ParseError):
    """The completion has structure, but it cannot be paired/aligned."""


class TurnParseError(ParseError):
    """A dialogue completion lacks a usable two-speaker structure."""


# --- generation stages -------------------------------------------------------

class StagnationError(DstgenError):
    """Scenario derivation stopped making progress (degenerate backend)."""


class DimensionMismatch(DstgenError):
    """Embedding vectors of differing dimensions were mixed."""


class InfoTypesFailed(DstgenError):
    """Information-type generation produced no usable list."""


class TooShort(DstgenError):
    """A generated dialogue stayed below the minimum turn count."""


class AnnotationFailed(DstgenError):
    """State annotation failed for a turn, after the parse retry."""

    def __init__(self, message: str, *, dialogue_id: str | None = None,
                 turn_index: int | None = None):
        super().__init__(message)
        self.dialogue_id = dialogue_id
        self.turn_index = turn_index

    def __str__(self) -> str:  # tag errors with their provenance
        where = ""
        if self.dialogue_id is not None:
            where = f" [dialogue={self.dialogue_id}"
            if self.turn_index is not None:
                where += f" turn={self.turn_index}"
            where += "]"
        return super().__str__() + where


class DescriptionFailed(DstgenError):
    """Slot-description generation yielded zero records, after retry."""


# --- assembly / evaluation ---------------------------------------------------

class EmptyCorpus(DstgenError):
    """The corpus contains no filled slot-value updates to sample from."""


class SchemaError(DstgenError):
    """A dataset record is missing a field or carries an unknown one."""


class EmptyGold(DstgenError):
    """No gold turns were supplied to the scorer."""


class UnknownDomain(DstgenError):
    """The requested holdout domain does not occur in the corpus."""


# --- cli ---------------------------------------------------------------------

class ConfigError(DstgenError):
    """A configuration value is missing, malformed, or out of range."""


class MissingInput(DstgenError):
    """A stage's input artifact does not exist yet."""
