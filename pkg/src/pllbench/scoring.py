"""Pseudo-log-likelihood scoring and forced-choice adjudication.

A sentence is scored by masking one content token at a time, asking the
backend for the log-probability of the original token at that masked
position, and summing the per-position values in ascending position
order (the PLL). The length-normalized variant (NormPLL) divides that
sum by the number of scoreable tokens, so candidates of unequal length
compete on a per-token basis.

Both quantities are always computed for every candidate; the caller's
``mode`` only selects which one drives the decision rule.
"""

from __future__ import annotations

import math
import threading
import time
from contextlib import nullcontext
from dataclasses import dataclass
from enum import Enum
from typing import TYPE_CHECKING, ContextManager, Sequence

from .errors import (
    BackendFailure,
    InvalidSequence,
    NonFiniteScore,
    PllBenchError,
    SequenceTooLong,
    WrongArity,
)

if TYPE_CHECKING:
    from .backends.base import MaskedLmBackend
    from .datasets import ForcedChoiceInstance


@dataclass(frozen=True)
class TokenizedSequence:
    """A tokenized sentence plus the per-position scoreability flags.

    ``scoreable_mask`` is True for content positions and False for special
    boundary tokens; only True positions enter the PLL sum and the
    normalization count L. ``offsets`` optionally maps each token back to a
    ``(start, end)`` character span of ``surface`` (None for tokens with no
    surface span, e.g. specials); it is required for windowed scoring.
    """

    tokens: tuple
    surface: str
    scoreable_mask: tuple[bool, ...]
    offsets: tuple[tuple[int, int] | None, ...] | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "scoreable_mask", tuple(bool(f) for f in self.scoreable_mask))
        if self.offsets is not None:
            object.__setattr__(
                self,
                "offsets",
                tuple(None if o is None else (int(o[0]), int(o[1])) for o in self.offsets),
            )
        if len(self.tokens) < 1:
            raise InvalidSequence("sequence must contain at least one token")
        if len(self.scoreable_mask) != len(self.tokens):
            raise InvalidSequence(
                f"scoreable_mask length {len(self.scoreable_mask)} != token count {len(self.tokens)}"
            )
        if self.offsets is not None and len(self.offsets) != len(self.tokens):
            raise InvalidSequence("offsets length does not match token count")
        if self.surface.strip() and not any(self.scoreable_mask):
            raise InvalidSequence("non-empty surface text must have at least one scoreable position")

    def __len__(self) -> int:
        return len(self.tokens)

    @property
    def scoreable_positions(self) -> tuple[int, ...]:
        return tuple(i for i, flag in enumerate(self.scoreable_mask) if flag)

    @property
    def scoreable_count(self) -> int:
        return sum(1 for flag in self.scoreable_mask if flag)


@dataclass(frozen=True)
class MaskedLogprobVector:
    """Per-position conditional log-probabilities (natural log) from a backend.

    ``logprobs[k]`` is log P(token at ``positions[k]`` | all other tokens,
    with that single position masked). Values must be finite and <= 0;
    positions must be strictly increasing.
    """

    logprobs: tuple[float, ...]
    positions: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "logprobs", tuple(float(v) for v in self.logprobs))
        object.__setattr__(self, "positions", tuple(int(p) for p in self.positions))
        if len(self.logprobs) != len(self.positions):
            raise BackendFailure(
                f"logprob count {len(self.logprobs)} != position count {len(self.positions)}"
            )
        for earlier, later in zip(self.positions, self.positions[1:]):
            if later <= earlier:
                raise BackendFailure("positions must be strictly increasing")
        for value in self.logprobs:
            if not math.isfinite(value):
                raise NonFiniteScore(f"backend returned non-finite log-probability {value!r}")
            if value > 0.0:
                raise NonFiniteScore(f"backend returned log-probability {value!r} > 0")


@dataclass(frozen=True)
class ScoreRecord:
    """One candidate's scores: the raw sum, the per-token value, and timing."""

    candidate_index: int
    pll: float
    norm_pll: float
    token_count: int
    wall_time: float

    def __post_init__(self) -> None:
        if self.token_count < 1:
            raise InvalidSequence("token_count must be >= 1")
        if self.norm_pll != self.pll / self.token_count:
            raise InvalidSequence("norm_pll must equal pll / token_count exactly")


class ScoreMode(str, Enum):
    """Which score drives decisions: the raw sum or the length-normalized value."""

    PLL = "pll"
    NORM_PLL = "normpll"

    def score_of(self, record: ScoreRecord) -> float:
        return record.pll if self is ScoreMode.PLL else record.norm_pll


@dataclass(frozen=True)
class Decision:
    """Outcome of adjudicating one forced-choice instance.

    ``chosen_index`` is set for binary/multi-choice decisions;
    ``two_best_correct`` for 2-best decisions. Exactly one is non-None.
    """

    mode: ScoreMode
    scores: tuple[ScoreRecord, ...]
    chosen_index: int | None = None
    two_best_correct: bool | None = None

    def __post_init__(self) -> None:
        if (self.chosen_index is None) == (self.two_best_correct is None):
            raise WrongArity("decision must carry exactly one of chosen_index / two_best_correct")
        if self.chosen_index is not None and not 0 <= self.chosen_index < len(self.scores):
            raise WrongArity(f"chosen_index {self.chosen_index} outside {len(self.scores)} records")


_lock_creation_guard = threading.Lock()
_fallback_serial_lock = threading.Lock()


def _serialization_guard(backend: MaskedLmBackend) -> ContextManager[object]:
    """Return the context manager serializing calls into a non-concurrent-safe backend.

    Concurrent-safe backends get a no-op guard. Others get one lock per
    backend instance (created lazily), so distinct backends never contend.
    """
    if getattr(backend, "concurrent_safe", True):
        return nullcontext()
    lock = getattr(backend, "_pllbench_serial_lock", None)
    if lock is None:
        with _lock_creation_guard:
            lock = getattr(backend, "_pllbench_serial_lock", None)
            if lock is None:
                lock = threading.Lock()
                try:
                    setattr(backend, "_pllbench_serial_lock", lock)
                except AttributeError:
                    lock = _fallback_serial_lock
    return lock


def _fetch_masked_logprobs(
    backend: MaskedLmBackend, seq: TokenizedSequence, positions: Sequence[int]
) -> MaskedLogprobVector:
    with _serialization_guard(backend):
        vector = backend.masked_logprobs(seq, list(positions))
    # Re-wrap so foreign backend objects still pass value validation.
    vector = MaskedLogprobVector(tuple(vector.logprobs), tuple(vector.positions))
    if vector.positions != tuple(positions):
        raise BackendFailure(
            f"backend answered positions {vector.positions}, requested {tuple(positions)}"
        )
    if vector.positions and vector.positions[-1] >= len(seq):
        raise BackendFailure("backend returned a position outside the sequence")
    return vector


def pll(seq: TokenizedSequence, backend: MaskedLmBackend) -> float:
    """Sum of masked-conditional log-probabilities over all scoreable positions.

    The sum runs in ascending position order so repeated runs are
    bit-identical. Special (non-scoreable) positions contribute nothing.
    """
    if seq.scoreable_count == 0:
        raise InvalidSequence("sequence has no scoreable positions")
    if len(seq) > backend.max_tokens:
        raise SequenceTooLong(f"{len(seq)} tokens > backend maximum {backend.max_tokens}")
    vector = _fetch_masked_logprobs(backend, seq, seq.scoreable_positions)
    total = 0.0
    for value in vector.logprobs:
        total += value
    return total


def norm_pll(seq: TokenizedSequence, backend: MaskedLmBackend) -> float:
    """PLL divided by the scoreable-token count L."""
    return pll(seq, backend) / seq.scoreable_count


def score_candidates(
    inst: ForcedChoiceInstance,
    backend: MaskedLmBackend,
    mode: ScoreMode = ScoreMode.PLL,
    *,
    max_tokens: int | None = None,
) -> list[ScoreRecord]:
    """Materialize and score every candidate of one instance, in order.

    Both PLL and NormPLL are populated on every record regardless of
    ``mode``. If any candidate tokenizes past the effective limit the whole
    instance is rejected up front with :class:`SequenceTooLong` (annotated
    with the offending candidate index and the per-candidate token counts)
    so an instance is never partially scored.
    """
    from .datasets import substitute

    limit = backend.max_tokens if max_tokens is None else min(max_tokens, backend.max_tokens)
    materialized = [substitute(inst, i) for i in range(len(inst.candidates))]
    sequences = [backend.tokenize(m.full_text) for m in materialized]

    over = [i for i, s in enumerate(sequences) if len(s) > limit]
    if over:
        err = SequenceTooLong(
            f"instance {inst.id}: candidate {over[0]} has {len(sequences[over[0]])} tokens"
            f" > limit {limit}"
        )
        err.candidate_index = over[0]
        err.texts = [m.full_text for m in materialized]
        err.token_counts = [len(s) for s in sequences]
        raise err

    del mode  # both scores are computed either way; mode matters at decision time
    records: list[ScoreRecord] = []
    for index, seq in enumerate(sequences):
        started = time.perf_counter()
        try:
            total = pll(seq, backend)
        except PllBenchError as exc:
            exc.candidate_index = index  # type: ignore[attr-defined]
            raise
        elapsed = time.perf_counter() - started
        records.append(
            ScoreRecord(
                candidate_index=index,
                pll=total,
                norm_pll=total / seq.scoreable_count,
                token_count=seq.scoreable_count,
                wall_time=elapsed,
            )
        )
    return records


def decide_binary(records: Sequence[ScoreRecord], mode: ScoreMode) -> Decision:
    """Pick the higher-scored of exactly two candidates; ties go to index 0."""
    if len(records) != 2:
        raise WrongArity(f"binary decision needs exactly 2 records, got {len(records)}")
    first, second = mode.score_of(records[0]), mode.score_of(records[1])
    chosen = 0 if first >= second else 1
    return Decision(mode=mode, scores=tuple(records), chosen_index=chosen)


def decide_two_best(
    records: Sequence[ScoreRecord], correct_flags: Sequence[bool], mode: ScoreMode
) -> Decision:
    """2-best rule: correct iff every correct candidate outscores every incorrect one.

    Strict inequality: an exact tie between the weakest correct and the
    strongest incorrect candidate counts as wrong.
    """
    if len(records) != len(correct_flags):
        raise WrongArity(
            f"{len(records)} records but {len(correct_flags)} correctness flags"
        )
    correct = [mode.score_of(r) for r, flag in zip(records, correct_flags) if flag]
    incorrect = [mode.score_of(r) for r, flag in zip(records, correct_flags) if not flag]
    if len(correct) < 2 or len(incorrect) < 1:
        raise WrongArity(
            f"2-best needs >= 2 correct and >= 1 incorrect flags, got {len(correct)}/{len(incorrect)}"
        )
    return Decision(
        mode=mode,
        scores=tuple(records),
        two_best_correct=min(correct) > max(incorrect),
    )
