"""Wire protocol for remote masked-LM scoring (version 1).

Messages are JSON objects, carried either as single lines over a byte
stream (newline-delimited, UTF-8) or as HTTP POST bodies. The client sends
raw text; tokenization stays server-side because tokenizers are
model-coupled. The summation into PLL stays client-side.

Requests::

    {"v": 1, "op": "info"}
    {"v": 1, "op": "masked_logprobs", "text": "...", "positions": [0, 2] | "all"}

Responses::

    {"v": 1, "model": "name", "max_tokens": N, "concurrent_safe": bool}
    {"v": 1, "token_count": N, "scoreable": [bool, ...],
     "positions": [...], "logprobs": [...]}
    {"v": 1, "error": "CODE", "message": "..."}

Error codes: ``TOO_LONG`` (text tokenizes past the server maximum),
``BAD_REQUEST`` (malformed message, empty/unencodable text, invalid
positions), ``MODEL_ERROR`` (the model failed to produce a score).

Normative: every requested position is masked independently -- one
conditional per position, never joint masking -- and ``logprobs[k]`` is the
natural-log probability of the original token at ``positions[k]``.
``positions == "all"`` means every scoreable position, ascending. An empty
position list is valid and returns only ``token_count`` and ``scoreable``
(how clients tokenize remotely). Responses echo positions in request
order; servers must answer identical requests with identical values, which
is what makes client retries safe.
"""

from __future__ import annotations

import json
from typing import Any

from ..errors import (
    BackendFailure,
    EmptyText,
    NonFiniteScore,
    PllBenchError,
    SequenceTooLong,
    UnencodableText,
    UnknownToken,
)
from .base import MaskedLmBackend, validate_positions

PROTOCOL_VERSION = 1

ERROR_TOO_LONG = "TOO_LONG"
ERROR_BAD_REQUEST = "BAD_REQUEST"
ERROR_MODEL_ERROR = "MODEL_ERROR"


def canonical_json(obj: Any) -> str:
    """Canonical encoding used for wire messages and golden vectors."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def error_response(code: str, message: str) -> dict[str, Any]:
    return {"v": PROTOCOL_VERSION, "error": code, "message": message}


def info_response(backend: MaskedLmBackend) -> dict[str, Any]:
    return {
        "v": PROTOCOL_VERSION,
        "model": backend.name,
        "max_tokens": backend.max_tokens,
        "concurrent_safe": backend.concurrent_safe,
    }


def handle_request(backend: MaskedLmBackend, request: Any) -> dict[str, Any]:
    """Serve one protocol request against an in-process backend.

    Pure apart from the backend call: a dict in, a dict out, never raises.
    Shared by every server transport so they cannot drift apart.
    """
    if not isinstance(request, dict):
        return error_response(ERROR_BAD_REQUEST, "request must be a JSON object")
    if request.get("v") != PROTOCOL_VERSION:
        return error_response(ERROR_BAD_REQUEST, f"unsupported protocol version {request.get('v')!r}")
    op = request.get("op")
    if op == "info":
        return info_response(backend)
    if op != "masked_logprobs":
        return error_response(ERROR_BAD_REQUEST, f"unknown op {op!r}")

    text = request.get("text")
    if not isinstance(text, str):
        return error_response(ERROR_BAD_REQUEST, "text must be a string")
    try:
        seq = backend.tokenize(text)
    except (EmptyText, UnencodableText) as exc:
        return error_response(ERROR_BAD_REQUEST, str(exc))
    except PllBenchError as exc:
        return error_response(ERROR_MODEL_ERROR, str(exc))
    if len(seq) > backend.max_tokens:
        return error_response(
            ERROR_TOO_LONG, f"{len(seq)} tokens > server maximum {backend.max_tokens}"
        )

    positions = request.get("positions")
    if positions == "all":
        wanted = list(seq.scoreable_positions)
    elif isinstance(positions, list):
        try:
            wanted = validate_positions(positions, len(seq))
        except ValueError as exc:
            return error_response(ERROR_BAD_REQUEST, str(exc))
    else:
        return error_response(ERROR_BAD_REQUEST, 'positions must be a list of integers or "all"')

    if wanted:
        try:
            vector = backend.masked_logprobs(seq, wanted)
        except SequenceTooLong as exc:
            return error_response(ERROR_TOO_LONG, str(exc))
        except (UnknownToken, NonFiniteScore, BackendFailure, PllBenchError) as exc:
            return error_response(ERROR_MODEL_ERROR, str(exc))
        answered = list(vector.positions)
        logprobs = list(vector.logprobs)
    else:
        answered, logprobs = [], []

    return {
        "v": PROTOCOL_VERSION,
        "token_count": len(seq),
        "scoreable": [bool(flag) for flag in seq.scoreable_mask],
        "positions": answered,
        "logprobs": logprobs,
    }
