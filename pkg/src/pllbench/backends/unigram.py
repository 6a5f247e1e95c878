"""Frequency smoke-test backend: conditionals that ignore context entirely.

Useful for exercising the full pipeline without a model; scores carry no
linguistic signal but every contract (shapes, determinism, timing) holds.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from pathlib import Path
from typing import Mapping, Sequence

from ..errors import UnknownToken
from ..scoring import MaskedLogprobVector, TokenizedSequence
from .base import MaskedLmBackend, validate_positions, whitespace_tokens


class UnigramBackend(MaskedLmBackend):
    """Context-free backend: log P(token) = log(count / total).

    With ``smoothing`` enabled, add-one counts apply, so an unseen token
    gets log(1 / (total + |V|)) instead of raising :class:`UnknownToken`.
    """

    def __init__(
        self,
        corpus: Mapping[str, int],
        *,
        smoothing: bool = False,
        name: str = "unigram",
        max_tokens: int = 512,
    ) -> None:
        super().__init__(name=name, max_tokens=max_tokens, concurrent_safe=True)
        self.counts = {token: int(count) for token, count in corpus.items()}
        if any(count < 0 for count in self.counts.values()):
            raise ValueError("token counts must be non-negative")
        self.total = sum(self.counts.values())
        if self.total <= 0:
            raise ValueError("corpus total count must be > 0")
        self.smoothing = bool(smoothing)

    def tokenize(self, text: str) -> TokenizedSequence:
        pieces = whitespace_tokens(text)
        return TokenizedSequence(
            tokens=tuple(token for token, _, _ in pieces),
            surface=text,
            scoreable_mask=tuple(True for _ in pieces),
            offsets=tuple((start, end) for _, start, end in pieces),
        )

    def logprob(self, token: str) -> float:
        count = self.counts.get(token)
        if self.smoothing:
            return math.log((0 if count is None else count) + 1) - math.log(
                self.total + len(self.counts)
            )
        if count is None or count == 0:
            raise UnknownToken(f"token {token!r} absent from corpus and smoothing is off")
        return math.log(count) - math.log(self.total)

    def masked_logprobs(
        self, seq: TokenizedSequence, positions: Sequence[int]
    ) -> MaskedLogprobVector:
        self.check_length(seq)
        cleaned = validate_positions(positions, len(seq))
        return MaskedLogprobVector(
            tuple(self.logprob(seq.tokens[p]) for p in cleaned), tuple(cleaned)
        )


def unigram_backend(
    corpus: Mapping[str, int], *, smoothing: bool = False, max_tokens: int = 512
) -> UnigramBackend:
    """Build the frequency backend from a token frequency map."""
    return UnigramBackend(corpus, smoothing=smoothing, max_tokens=max_tokens)


def load_counts(path: str | Path) -> dict[str, int]:
    """Read token counts from a JSON object file, or count a raw text corpus.

    A ``.json`` file must hold ``{"token": count, ...}``. Any other file is
    treated as plain text and counted by whitespace token.
    """
    path = Path(path)
    if path.suffix == ".json":
        raw = json.loads(path.read_text(encoding="utf-8"))
        return {str(token): int(count) for token, count in raw.items()}
    return dict(Counter(path.read_text(encoding="utf-8").split()))
