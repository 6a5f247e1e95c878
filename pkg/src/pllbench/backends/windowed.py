"""Windowed scoring for sequences longer than a backend's token maximum.

Each requested position is scored inside the sliding window whose center
lies nearest to it (earliest window on ties), so positions keep as much
bidirectional context as the window allows. Output shape matches a direct
`masked_logprobs` call.
"""

from __future__ import annotations

from typing import Sequence

from ..errors import BackendFailure
from ..scoring import MaskedLogprobVector, TokenizedSequence
from .base import MaskedLmBackend, validate_positions


def window_starts(length: int, window: int, stride: int) -> list[int]:
    """Start offsets of the candidate windows covering a sequence.

    Strided from zero; one extra window flush with the sequence end is
    appended when the stride pattern would leave the tail uncovered.
    """
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    if stride < 1:
        raise ValueError(f"stride must be >= 1, got {stride}")
    if length <= window:
        return [0]
    starts = list(range(0, length - window + 1, stride))
    if starts[-1] != length - window:
        starts.append(length - window)
    return starts


def _slice_sequence(seq: TokenizedSequence, start: int, stop: int) -> TokenizedSequence:
    offsets = None if seq.offsets is None else seq.offsets[start:stop]
    if seq.offsets is None:
        surface = ""
    else:
        spans = [o for o in offsets if o is not None]  # type: ignore[union-attr]
        surface = seq.surface[spans[0][0] : spans[-1][1]] if spans else ""
    return TokenizedSequence(
        tokens=seq.tokens[start:stop],
        surface=surface,
        scoreable_mask=seq.scoreable_mask[start:stop],
        offsets=offsets,
    )


def windowed_masked_logprobs(
    backend: MaskedLmBackend,
    seq: TokenizedSequence,
    positions: Sequence[int],
    window: int,
    stride: int,
) -> MaskedLogprobVector:
    """Score positions through sliding windows instead of the full sequence."""
    if window > backend.max_tokens:
        raise ValueError(f"window {window} exceeds backend maximum {backend.max_tokens}")
    cleaned = validate_positions(positions, len(seq))
    if len(seq) <= window:
        return backend.masked_logprobs(seq, cleaned)
    if seq.offsets is None:
        raise BackendFailure(
            "windowed scoring needs per-token surface offsets; backend did not provide them"
        )

    starts = window_starts(len(seq), window, stride)
    assignments: dict[int, list[int]] = {}
    for position in cleaned:
        covering = [s for s in starts if s <= position < s + window]
        if not covering:
            raise ValueError(
                f"position {position} not covered by any window (stride {stride} > window {window}?)"
            )
        best = min(covering, key=lambda s: (abs(position - (s + (window - 1) / 2.0)), s))
        assignments.setdefault(best, []).append(position)

    by_position: dict[int, float] = {}
    for start in sorted(assignments):
        local = [p - start for p in assignments[start]]
        sub = _slice_sequence(seq, start, start + window)
        vector = backend.masked_logprobs(sub, local)
        for local_pos, value in zip(vector.positions, vector.logprobs):
            by_position[local_pos + start] = value
    return MaskedLogprobVector(
        tuple(by_position[p] for p in cleaned), tuple(cleaned)
    )


class WindowedBackend(MaskedLmBackend):
    """Wrapper lifting a backend's token maximum via sliding-window scoring.

    Tokenization delegates to the wrapped backend; only `masked_logprobs`
    changes. The wrapped backend's determinism and concurrency flags carry
    over.
    """

    def __init__(
        self, inner: MaskedLmBackend, window: int, stride: int, *, max_tokens: int
    ) -> None:
        super().__init__(
            name=f"{inner.name}+window{window}x{stride}",
            max_tokens=max_tokens,
            concurrent_safe=inner.concurrent_safe,
        )
        if window > inner.max_tokens:
            raise ValueError(f"window {window} exceeds inner backend maximum {inner.max_tokens}")
        self.inner = inner
        self.window = int(window)
        self.stride = int(stride)

    def tokenize(self, text: str) -> TokenizedSequence:
        return self.inner.tokenize(text)

    def masked_logprobs(
        self, seq: TokenizedSequence, positions: Sequence[int]
    ) -> MaskedLogprobVector:
        self.check_length(seq)
        return windowed_masked_logprobs(self.inner, seq, positions, self.window, self.stride)
