"""Shared test backends: an explicit two-symbol table, a stub with preset
conditionals, and a procedural (virtual) conditional table for exhaustive
oracle comparisons."""

from __future__ import annotations

import math
import zlib
from functools import lru_cache
from typing import Sequence

import pytest

from pllbench.backends import HOLE, TableBackend
from pllbench.backends.base import MaskedLmBackend, validate_positions, whitespace_tokens
from pllbench.scoring import MaskedLogprobVector, TokenizedSequence


class StubBackend(MaskedLmBackend):
    """Whitespace tokenizer; per-token conditional read from a fixed mapping."""

    def __init__(self, logprob_by_token, *, shift=0.0, max_tokens=64, concurrent_safe=True):
        super().__init__(name="stub", max_tokens=max_tokens, concurrent_safe=concurrent_safe)
        self.logprob_by_token = dict(logprob_by_token)
        self.shift = shift
        self.calls = 0

    def tokenize(self, text: str) -> TokenizedSequence:
        pieces = whitespace_tokens(text)
        return TokenizedSequence(
            tokens=tuple(tok for tok, _, _ in pieces),
            surface=text,
            scoreable_mask=tuple(True for _ in pieces),
            offsets=tuple((s, e) for _, s, e in pieces),
        )

    def masked_logprobs(self, seq, positions: Sequence[int]) -> MaskedLogprobVector:
        self.check_length(seq)
        cleaned = validate_positions(positions, len(seq))
        self.calls += 1
        return MaskedLogprobVector(
            tuple(self.logprob_by_token[seq.tokens[p]] + self.shift for p in cleaned),
            tuple(cleaned),
        )


class ProceduralTable:
    """Virtual conditional table: distributions derived from a hash of the context.

    ``context_width`` of N reduces the context to the N neighbors on each
    side of the hole (None past the sequence ends), which makes the
    conditionals local -- the precondition for windowed scoring to agree
    with full-sequence scoring.
    """

    def __init__(self, vocabulary: Sequence[str], seed: int = 0, context_width: int | None = None):
        self.vocabulary = tuple(vocabulary)
        self.seed = seed
        self.context_width = context_width
        self._distribution = lru_cache(maxsize=None)(self._compute)

    def _reduce(self, key: tuple) -> tuple:
        if self.context_width is None:
            return key
        hole = key.index(HOLE)
        width = self.context_width
        left = [key[i] if 0 <= i else None for i in range(hole - width, hole)]
        right = [
            key[i] if i < len(key) else None for i in range(hole + 1, hole + 1 + width)
        ]
        return (*left, HOLE, *right)

    def _compute(self, reduced: tuple) -> dict[str, float]:
        weights = []
        for symbol in self.vocabulary:
            digest = zlib.crc32(f"{self.seed}|{reduced!r}|{symbol}".encode("utf-8"))
            weights.append(1.0 + (digest % 997) / 997.0)
        total = sum(weights)
        return {symbol: w / total for symbol, w in zip(self.vocabulary, weights)}

    def __getitem__(self, key: tuple) -> dict[str, float]:
        if key.count(HOLE) != 1:
            raise KeyError(key)
        return self._distribution(self._reduce(key))


AB_TABLE = {
    (HOLE, "b"): {"a": 0.8, "b": 0.2},
    ("a", HOLE): {"a": 0.3, "b": 0.7},
    (HOLE,): {"a": 0.5, "b": 0.5},
    ("a", HOLE, "b"): {"a": 0.1, "b": 0.9},
    (HOLE, "a", "b"): {"a": 0.6, "b": 0.4},
    ("a", "b", HOLE): {"a": 0.25, "b": 0.75},
}


@pytest.fixture
def ab_backend() -> TableBackend:
    return TableBackend(["a", "b"], dict(AB_TABLE))


def oracle_pll(table, backend: TableBackend, tokens: Sequence[str]) -> float:
    """Independent brute-force PLL: direct table lookup and ascending add."""
    total = 0.0
    for position in range(len(tokens)):
        key = tuple(HOLE if i == position else t for i, t in enumerate(tokens))
        total += math.log(table[key][tokens[position]])
    return total
