#!/usr/bin/env python3
"""Regenerate the protocol conformance vectors under conformance/.

Deterministic: the same seed always produces byte-identical files. The toy
model file doubles as a table-backend file for the CLI and as the toy
checkpoint any protocol server implementation can load, so every server
can be checked against the same golden request/response pairs.
"""

from __future__ import annotations

import itertools
import json
import random
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from pllbench.backends import HOLE, TableBackend
from pllbench.backends.protocol import PROTOCOL_VERSION, handle_request

ROOT = Path(__file__).resolve().parent.parent
VOCABULARY = ["a", "b", "c"]
MAX_TOKENS = 16
NAME = "toy-table"
SEED = 20240917


def build_table() -> dict[str, dict[str, float]]:
    rng = random.Random(SEED)
    table: dict[str, dict[str, float]] = {}
    for length in range(1, 5):
        for tokens in itertools.product(VOCABULARY, repeat=length):
            for hole in range(length):
                key = " ".join(HOLE if i == hole else t for i, t in enumerate(tokens))
                if key in table:
                    continue
                weights = [0.05 + rng.random() for _ in VOCABULARY]
                total = sum(weights)
                table[key] = {sym: w / total for sym, w in zip(VOCABULARY, weights)}
    return table


def build_cases(backend: TableBackend) -> list[dict]:
    rng = random.Random(SEED + 1)
    cases: list[dict] = []

    def add(request: dict) -> None:
        cases.append({"request": request, "response": handle_request(backend, request)})

    add({"v": PROTOCOL_VERSION, "op": "info"})

    for _ in range(12):
        length = rng.randint(1, 4)
        text = " ".join(rng.choice(VOCABULARY) for _ in range(length))
        population = list(range(length))
        subset = sorted(rng.sample(population, rng.randint(1, length)))
        for positions in ("all", subset, []):
            add(
                {
                    "v": PROTOCOL_VERSION,
                    "op": "masked_logprobs",
                    "text": text,
                    "positions": positions,
                }
            )

    long_text = " ".join("a" for _ in range(MAX_TOKENS + 1))
    add({"v": PROTOCOL_VERSION, "op": "masked_logprobs", "text": long_text, "positions": "all"})
    add({"v": PROTOCOL_VERSION, "op": "masked_logprobs", "text": "a z", "positions": "all"})
    add({"v": PROTOCOL_VERSION, "op": "masked_logprobs", "text": "   ", "positions": "all"})
    add({"v": PROTOCOL_VERSION, "op": "masked_logprobs", "text": "a b", "positions": [1, 0]})
    add({"v": PROTOCOL_VERSION, "op": "masked_logprobs", "text": "a b", "positions": [7]})
    add({"v": PROTOCOL_VERSION, "op": "masked_logprobs", "text": "a b", "positions": "some"})
    add({"v": PROTOCOL_VERSION, "op": "masked_logprobs", "positions": "all"})
    add({"v": PROTOCOL_VERSION, "op": "generate", "text": "a"})
    add({"v": 2, "op": "info"})

    return cases


def main() -> None:
    table = build_table()
    model = {
        "name": NAME,
        "max_tokens": MAX_TOKENS,
        "vocabulary": VOCABULARY,
        "conditionals": table,
    }
    out_dir = ROOT / "conformance"
    out_dir.mkdir(exist_ok=True)
    model_path = out_dir / "toy_model.json"
    model_path.write_text(json.dumps(model, indent=1, sort_keys=True) + "\n", encoding="utf-8")

    backend = TableBackend.from_json(model_path)
    vectors = {"model_file": "toy_model.json", "cases": build_cases(backend)}
    (out_dir / "vectors.json").write_text(
        json.dumps(vectors, indent=1, sort_keys=True) + "\n", encoding="utf-8"
    )
    print(f"wrote {model_path} ({len(table)} contexts) and vectors.json ({len(vectors['cases'])} cases)")


if __name__ == "__main__":
    main()
