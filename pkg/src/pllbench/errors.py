"""Exception types shared across the package.

Every error raised by pllbench derives from :class:`PllBenchError`, so
callers can catch one base class at the CLI boundary and map it to an
exit code.
"""

from __future__ import annotations


class PllBenchError(Exception):
    """Base class for all pllbench errors."""


# --- scoring ---------------------------------------------------------------

class InvalidSequence(PllBenchError):
    """A tokenized sequence violates a scoring precondition (e.g. no scoreable positions)."""


class SequenceTooLong(PllBenchError):
    """Sequence exceeds the backend's declared token maximum.

    Carries ``candidate_index`` when raised while scoring a forced-choice
    instance, plus ``texts``/``token_counts`` so the caller can still audit
    the skipped instance.
    """

    candidate_index: int | None = None
    texts: list[str] | None = None
    token_counts: list[int] | None = None


class BackendFailure(PllBenchError):
    """A backend broke its contract (protocol error, missing table entry, transport failure)."""


class NonFiniteScore(PllBenchError):
    """A backend returned a value that is not a valid log-probability (NaN, infinity, or > 0)."""


class WrongArity(PllBenchError):
    """Decision rule applied to the wrong number of records or mismatched flags."""


# --- tokenization ----------------------------------------------------------

class EmptyText(PllBenchError):
    """Text is empty after trimming."""


class UnencodableText(PllBenchError):
    """Text contains symbols outside the backend vocabulary with no fallback."""


class UnknownToken(PllBenchError):
    """Token absent from a frequency corpus and no smoothing floor configured."""


# --- dataset parsing -------------------------------------------------------

class MalformedLine(PllBenchError):
    """A JSON-lines record could not be parsed; carries the 1-based line number."""

    def __init__(self, line_number: int, message: str) -> None:
        super().__init__(f"line {line_number}: {message}")
        self.line_number = line_number


class BadAnswerIndex(PllBenchError):
    """Answer field does not name a valid candidate."""


class SchemaError(PllBenchError):
    """Document does not follow the expected schema."""


class MissingField(PllBenchError):
    """A required field is absent from a record."""


class MissingPlaceholder(PllBenchError):
    """Template has no substitution placeholder."""


class WrongCandidateCount(PllBenchError):
    """Row does not supply the expected number of candidates or labels."""


class MalformedRow(PllBenchError):
    """A structured row could not be interpreted."""


class IndexOutOfRange(PllBenchError):
    """Candidate index outside the instance's candidate list."""


# --- aggregation -----------------------------------------------------------

class EmptyInput(PllBenchError):
    """Aggregation requires at least one decision."""


class RejectedMixedModes(PllBenchError):
    """Binary and 2-best instances cannot be aggregated into one report."""


class ModeMismatch(PllBenchError):
    """Reports scored under different modes cannot be compared."""
