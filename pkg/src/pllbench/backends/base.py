"""Backend contract: tokenization plus masked-conditional log-probabilities.

Every backend owns its tokenizer (real models each ship their own), exposes
a declared token maximum, and answers `masked_logprobs` queries where each
requested position is masked independently of the others -- one conditional
per position, never joint masking. That independence IS the definition the
scoring layer builds on.
"""

from __future__ import annotations

import math
from abc import ABC, abstractmethod
from typing import Sequence

from ..errors import EmptyText, SequenceTooLong
from ..scoring import MaskedLogprobVector, TokenizedSequence


class MaskedLmBackend(ABC):
    """Abstract masked-LM scoring backend."""

    def __init__(self, name: str, max_tokens: int, concurrent_safe: bool) -> None:
        if not name:
            raise ValueError("backend name must be non-empty")
        if max_tokens < 2:
            raise ValueError(f"max_tokens must be >= 2, got {max_tokens}")
        self.name = name
        self.max_tokens = int(max_tokens)
        self.concurrent_safe = bool(concurrent_safe)

    @abstractmethod
    def tokenize(self, text: str) -> TokenizedSequence:
        """Tokenize ``text`` deterministically; specials flagged non-scoreable."""

    @abstractmethod
    def masked_logprobs(
        self, seq: TokenizedSequence, positions: Sequence[int]
    ) -> MaskedLogprobVector:
        """Log P(original token | context with that one position masked), per position."""

    def check_length(self, seq: TokenizedSequence) -> None:
        if len(seq) > self.max_tokens:
            raise SequenceTooLong(f"{len(seq)} tokens > backend maximum {self.max_tokens}")

    def __repr__(self) -> str:  # pragma: no cover
        return f"<{type(self).__name__} {self.name!r} max_tokens={self.max_tokens}>"


def whitespace_tokens(text: str) -> list[tuple[str, int, int]]:
    """Split on whitespace runs, keeping (token, start, end) character spans."""
    if not text.strip():
        raise EmptyText("text is empty after trimming")
    tokens: list[tuple[str, int, int]] = []
    index = 0
    length = len(text)
    while index < length:
        while index < length and text[index].isspace():
            index += 1
        if index >= length:
            break
        start = index
        while index < length and not text[index].isspace():
            index += 1
        tokens.append((text[start:index], start, index))
    return tokens


def validate_positions(positions: Sequence[int], length: int) -> list[int]:
    """Check positions are integers, strictly ascending, and within bounds."""
    cleaned: list[int] = []
    previous = -1
    for value in positions:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ValueError(f"position {value!r} is not an integer")
        if value <= previous:
            raise ValueError("positions must be strictly ascending (deduplicated)")
        if not 0 <= value < length:
            raise ValueError(f"position {value} outside sequence of length {length}")
        cleaned.append(value)
        previous = value
    return cleaned


def validate_distribution(dist, vocabulary: Sequence[str]) -> None:
    """A conditional distribution must cover positive probabilities summing to 1."""
    total = 0.0
    for symbol in vocabulary:
        p = dist.get(symbol) if hasattr(dist, "get") else None
        if p is None:
            raise ValueError(f"distribution missing vocabulary symbol {symbol!r}")
        if not (p > 0.0) or not math.isfinite(p):
            raise ValueError(f"probability for {symbol!r} must be finite and > 0, got {p!r}")
        total += p
    if abs(total - 1.0) > 1e-9:
        raise ValueError(f"distribution sums to {total!r}, expected 1 within 1e-9")
