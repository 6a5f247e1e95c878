"""Deterministic table-driven backend: the desk-scale oracle.

Conditionals come from an explicit mapping of context-with-one-hole to a
probability distribution over the vocabulary, so every score the pipeline
produces can be checked by direct lookup-and-add. Table keys are token
tuples with the hole marker ``HOLE`` at the masked position.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Mapping, Sequence

from ..errors import BackendFailure, UnencodableText
from ..scoring import MaskedLogprobVector, TokenizedSequence
from .base import MaskedLmBackend, validate_distribution, validate_positions, whitespace_tokens

HOLE = "_"


class TableBackend(MaskedLmBackend):
    """Masked LM whose conditionals are read from an explicit table.

    ``conditional_table`` maps a token tuple containing exactly one ``HOLE``
    to a mapping from vocabulary symbol to probability. Immutable after
    construction, hence concurrent-safe. Any Mapping-like object works; a
    plain dict is validated eagerly, anything else per lookup.
    """

    def __init__(
        self,
        vocabulary: Sequence[str],
        conditional_table: Mapping[tuple[str, ...], Mapping[str, float]],
        *,
        name: str = "table",
        max_tokens: int = 512,
    ) -> None:
        super().__init__(name=name, max_tokens=max_tokens, concurrent_safe=True)
        if not vocabulary:
            raise ValueError("vocabulary must be non-empty")
        if HOLE in vocabulary:
            raise ValueError(f"vocabulary must not contain the hole marker {HOLE!r}")
        self.vocabulary = tuple(vocabulary)
        self.conditional_table = conditional_table
        if isinstance(conditional_table, dict):
            for key, dist in conditional_table.items():
                if sum(1 for tok in key if tok == HOLE) != 1:
                    raise ValueError(f"table key {key!r} must contain exactly one hole")
                validate_distribution(dist, self.vocabulary)

    @classmethod
    def from_json(cls, path: str | Path) -> "TableBackend":
        """Load a table file: vocabulary plus space-joined context keys.

        Schema::

            {"name": "...", "max_tokens": N,
             "vocabulary": ["a", "b"],
             "conditionals": {"_ b": {"a": 0.8, "b": 0.2}, ...}}
        """
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        table = {
            tuple(key.split()): {tok: float(p) for tok, p in dist.items()}
            for key, dist in raw["conditionals"].items()
        }
        return cls(
            vocabulary=raw["vocabulary"],
            conditional_table=table,
            name=raw.get("name", "table"),
            max_tokens=int(raw.get("max_tokens", 512)),
        )

    def tokenize(self, text: str) -> TokenizedSequence:
        pieces = whitespace_tokens(text)
        for token, _, _ in pieces:
            if token not in self.vocabulary:
                raise UnencodableText(f"token {token!r} outside vocabulary")
        return TokenizedSequence(
            tokens=tuple(token for token, _, _ in pieces),
            surface=text,
            scoreable_mask=tuple(True for _ in pieces),
            offsets=tuple((start, end) for _, start, end in pieces),
        )

    def masked_logprobs(
        self, seq: TokenizedSequence, positions: Sequence[int]
    ) -> MaskedLogprobVector:
        self.check_length(seq)
        cleaned = validate_positions(positions, len(seq))
        logprobs: list[float] = []
        for position in cleaned:
            key = tuple(
                HOLE if index == position else token for index, token in enumerate(seq.tokens)
            )
            try:
                dist = self.conditional_table[key]
            except KeyError:
                raise BackendFailure(f"no table entry for context {key!r}") from None
            validate_distribution(dist, self.vocabulary)
            logprobs.append(math.log(dist[seq.tokens[position]]))
        return MaskedLogprobVector(tuple(logprobs), tuple(cleaned))
