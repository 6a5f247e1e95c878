"""Local tiny-BERT checkpoints so the bridge is testable without downloads."""

from __future__ import annotations

from pathlib import Path

import pytest
import torch
from transformers import BertConfig, BertForMaskedLM, BertModel, BertTokenizer

VOCAB = [
    "[PAD]", "[UNK]", "[CLS]", "[SEP]", "[MASK]",
    "a", "b", "c", "the", "cat", "sat", "on", "mat", "dog", "ran",
]


def _tiny_config() -> BertConfig:
    return BertConfig(
        vocab_size=len(VOCAB),
        hidden_size=32,
        num_hidden_layers=2,
        num_attention_heads=2,
        intermediate_size=64,
        max_position_embeddings=32,
    )


def _write_tokenizer(directory: Path) -> BertTokenizer:
    vocab_file = directory / "vocab.txt"
    vocab_file.write_text("\n".join(VOCAB) + "\n", encoding="utf-8")
    tokenizer = BertTokenizer(str(vocab_file), do_lower_case=True, model_max_length=32)
    tokenizer.save_pretrained(directory)
    return tokenizer


@pytest.fixture(scope="session")
def tiny_checkpoint(tmp_path_factory) -> Path:
    """A complete masked-LM checkpoint (head included), fixed seed."""
    directory = tmp_path_factory.mktemp("tiny-mlm")
    _write_tokenizer(directory)
    torch.manual_seed(1234)
    model = BertForMaskedLM(_tiny_config())
    model.save_pretrained(directory)
    return directory


@pytest.fixture(scope="session")
def headless_checkpoint(tmp_path_factory) -> Path:
    """An encoder-only checkpoint: loading it as a masked LM leaves the
    prediction head randomly initialized."""
    directory = tmp_path_factory.mktemp("tiny-headless")
    _write_tokenizer(directory)
    torch.manual_seed(1234)
    model = BertModel(_tiny_config())
    model.save_pretrained(directory)
    return directory


@pytest.fixture(scope="session")
def conformance_dir() -> Path:
    return Path(__file__).resolve().parents[2] / "conformance"
