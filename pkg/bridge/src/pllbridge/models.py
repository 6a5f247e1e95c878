"""Model wrappers served by the bridge.

Two kinds: pretrained masked LMs loaded through transformers, and a
deterministic toy checkpoint (a JSON conditional table) used to prove
protocol conformance without any weights. Both answer the same question:
the log-probability of the original token at one masked position, with
exactly that position masked -- never more than one at a time. Throughput
comes from batching positions across the batch dimension, which must not
change any value.
"""

from __future__ import annotations

import json
import math
import sys
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Sequence

HOLE = "_"

# Parameter-name markers for masked-LM prediction heads across the BERT
# family (bert/roberta/albert/deberta/distilbert/electra).
HEAD_KEY_MARKERS = (
    "cls.predictions",
    "lm_head",
    "lm_predictions",
    "predictions",
    "vocab_projector",
    "vocab_transform",
    "generator_lm_head",
)


class BridgeError(Exception):
    """Base error; ``code`` is the wire-protocol error code to report."""

    code = "MODEL_ERROR"


class BadInput(BridgeError):
    code = "BAD_REQUEST"


class InputTooLong(BridgeError):
    code = "TOO_LONG"


class ModelFailure(BridgeError):
    code = "MODEL_ERROR"


class StartupError(Exception):
    """The checkpoint cannot serve; raised before the server binds."""


class MaskedModel(ABC):
    """What the server needs from a model: encode text, score masked slots."""

    name: str
    max_tokens: int

    @abstractmethod
    def encode(self, text: str) -> tuple[list, list[bool]]:
        """Return (tokens, scoreable flags); specials flagged False."""

    @abstractmethod
    def masked_logprobs(self, tokens: list, positions: Sequence[int]) -> list[float]:
        """log P(original token at p | others, position p masked), per position."""


class ToyTableModel(MaskedModel):
    """Deterministic checkpoint: conditionals read from a JSON table file.

    File schema: ``{"name", "max_tokens", "vocabulary", "conditionals"}``
    where conditional keys are space-joined token contexts with ``_`` at
    the masked slot.
    """

    def __init__(self, path: str | Path) -> None:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        self.name = str(raw.get("name", "toy"))
        self.max_tokens = int(raw.get("max_tokens", 512))
        self.vocabulary = set(raw["vocabulary"])
        self.table = {
            tuple(key.split()): {tok: float(p) for tok, p in dist.items()}
            for key, dist in raw["conditionals"].items()
        }

    def encode(self, text: str) -> tuple[list, list[bool]]:
        tokens = text.split()
        if not tokens:
            raise BadInput("text is empty after trimming")
        for token in tokens:
            if token not in self.vocabulary:
                raise BadInput(f"token {token!r} outside vocabulary")
        return tokens, [True] * len(tokens)

    def masked_logprobs(self, tokens: list, positions: Sequence[int]) -> list[float]:
        values: list[float] = []
        for position in positions:
            key = tuple(HOLE if i == position else t for i, t in enumerate(tokens))
            dist = self.table.get(key)
            if dist is None:
                raise ModelFailure(f"no table entry for context {key!r}")
            values.append(math.log(dist[tokens[position]]))
        return values


class HfMaskedModel(MaskedModel):
    """A pretrained masked LM loaded through transformers.

    Refuses to load checkpoints whose prediction-head weights are missing
    (they would be randomly initialized and every score would be noise).
    One masked position per row; positions are batched across the batch
    dimension up to ``batch_size``.
    """

    def __init__(
        self,
        model_identifier: str,
        *,
        device: str = "cpu",
        batch_size: int = 8,
        max_tokens: int | None = None,
    ) -> None:
        import torch
        from transformers import AutoModelForMaskedLM, AutoTokenizer

        if batch_size < 1:
            raise StartupError("batch_size must be >= 1")
        self._torch = torch
        self.tokenizer = AutoTokenizer.from_pretrained(model_identifier)
        if self.tokenizer.mask_token_id is None:
            raise StartupError(
                f"{model_identifier}: tokenizer has no mask token; not a masked LM"
            )
        model, loading_info = AutoModelForMaskedLM.from_pretrained(
            model_identifier, output_loading_info=True
        )
        missing = list(loading_info.get("missing_keys", ()))
        head_missing = [
            key for key in missing if any(marker in key for marker in HEAD_KEY_MARKERS)
        ]
        if head_missing:
            raise StartupError(
                f"{model_identifier}: prediction-head weights absent from the "
                f"checkpoint and would be randomly initialized: {sorted(head_missing)}. "
                "Scores from an untrained head are noise; train or pick a checkpoint "
                "with a masked-LM head. Refusing to serve."
            )
        if missing:
            print(f"note: non-head weights missing from checkpoint: {missing}", file=sys.stderr)
        self.model = model.to(device)
        self.model.eval()
        self.device = device
        self.batch_size = int(batch_size)
        self.name = model_identifier
        if max_tokens is not None:
            self.max_tokens = int(max_tokens)
        else:
            declared = int(getattr(self.tokenizer, "model_max_length", 512) or 512)
            self.max_tokens = declared if declared <= 100_000 else 512

    def encode(self, text: str) -> tuple[list, list[bool]]:
        if not text.strip():
            raise BadInput("text is empty after trimming")
        ids = self.tokenizer(text, add_special_tokens=True)["input_ids"]
        if not ids:
            raise BadInput("text encodes to no tokens")
        special = self.tokenizer.get_special_tokens_mask(ids, already_has_special_tokens=True)
        scoreable = [flag == 0 for flag in special]
        if not any(scoreable):
            raise BadInput("text has no scoreable tokens")
        return list(ids), scoreable

    def masked_logprobs(self, tokens: list, positions: Sequence[int]) -> list[float]:
        torch = self._torch
        mask_id = self.tokenizer.mask_token_id
        values: list[float] = []
        base = torch.tensor(tokens, dtype=torch.long)
        for start in range(0, len(positions), self.batch_size):
            chunk = list(positions[start : start + self.batch_size])
            batch = base.unsqueeze(0).repeat(len(chunk), 1).to(self.device)
            for row, position in enumerate(chunk):
                batch[row, position] = mask_id
            try:
                with torch.no_grad():
                    logits = self.model(input_ids=batch).logits
            except Exception as exc:  # device / shape failures surface as MODEL_ERROR
                raise ModelFailure(f"forward pass failed: {exc}") from exc
            for row, position in enumerate(chunk):
                logprobs = torch.log_softmax(logits[row, position].float(), dim=-1)
                value = float(logprobs[tokens[position]])
                if not math.isfinite(value):
                    raise ModelFailure(f"non-finite log-probability at position {position}")
                values.append(min(value, 0.0))
        return values


def load_model(
    identifier: str,
    *,
    device: str = "cpu",
    batch_size: int = 8,
    max_tokens: int | None = None,
) -> MaskedModel:
    """``toy:<path.json>`` loads the table checkpoint; anything else is a
    transformers model identifier or local checkpoint directory."""
    if identifier.startswith("toy:"):
        model = ToyTableModel(identifier[len("toy:"):])
        if max_tokens is not None:
            model.max_tokens = int(max_tokens)
        return model
    return HfMaskedModel(
        identifier, device=device, batch_size=batch_size, max_tokens=max_tokens
    )
