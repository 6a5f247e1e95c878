"""HTTP server speaking the masked-scoring wire protocol (version 1).

Requests are JSON POST bodies; responses are JSON. One model instance,
one forward pass at a time (a lock queues concurrent requests); within a
response, values follow the request's position order.

    {"v": 1, "op": "info"}
    {"v": 1, "op": "masked_logprobs", "text": "...", "positions": [...] | "all"}

Error codes: TOO_LONG, BAD_REQUEST, MODEL_ERROR.
"""

from __future__ import annotations

import json
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from typing import Any

from .models import BridgeError, MaskedModel

PROTOCOL_VERSION = 1


def _error(code: str, message: str) -> dict[str, Any]:
    return {"v": PROTOCOL_VERSION, "error": code, "message": message}


def _validate_positions(raw: Any, length: int) -> list[int]:
    positions: list[int] = []
    previous = -1
    for value in raw:
        if not isinstance(value, int) or isinstance(value, bool):
            raise ValueError(f"position {value!r} is not an integer")
        if value <= previous:
            raise ValueError("positions must be strictly ascending (deduplicated)")
        if not 0 <= value < length:
            raise ValueError(f"position {value} outside sequence of length {length}")
        positions.append(value)
        previous = value
    return positions


def handle_request(model: MaskedModel, lock: threading.Lock, request: Any) -> dict[str, Any]:
    """One request in, one response out; never raises."""
    if not isinstance(request, dict):
        return _error("BAD_REQUEST", "request must be a JSON object")
    if request.get("v") != PROTOCOL_VERSION:
        return _error("BAD_REQUEST", f"unsupported protocol version {request.get('v')!r}")
    op = request.get("op")
    if op == "info":
        return {
            "v": PROTOCOL_VERSION,
            "model": model.name,
            "max_tokens": model.max_tokens,
            "concurrent_safe": True,
        }
    if op != "masked_logprobs":
        return _error("BAD_REQUEST", f"unknown op {op!r}")

    text = request.get("text")
    if not isinstance(text, str):
        return _error("BAD_REQUEST", "text must be a string")
    try:
        tokens, scoreable = model.encode(text)
    except BridgeError as exc:
        return _error(exc.code, str(exc))
    if len(tokens) > model.max_tokens:
        return _error("TOO_LONG", f"{len(tokens)} tokens > server maximum {model.max_tokens}")

    raw_positions = request.get("positions")
    if raw_positions == "all":
        positions = [i for i, flag in enumerate(scoreable) if flag]
    elif isinstance(raw_positions, list):
        try:
            positions = _validate_positions(raw_positions, len(tokens))
        except ValueError as exc:
            return _error("BAD_REQUEST", str(exc))
    else:
        return _error("BAD_REQUEST", 'positions must be a list of integers or "all"')

    if positions:
        try:
            with lock:
                values = model.masked_logprobs(tokens, positions)
        except BridgeError as exc:
            return _error(exc.code, str(exc))
    else:
        values = []

    return {
        "v": PROTOCOL_VERSION,
        "token_count": len(tokens),
        "scoreable": [bool(flag) for flag in scoreable],
        "positions": positions,
        "logprobs": values,
    }


class BridgeServer:
    """Threaded HTTP server bound to a model; context manager shuts it down."""

    def __init__(self, model: MaskedModel, host: str = "127.0.0.1", port: int = 0) -> None:
        self.model = model
        self._lock = threading.Lock()
        outer = self

        class Handler(BaseHTTPRequestHandler):
            def do_POST(self) -> None:  # noqa: N802 (http.server API)
                length = int(self.headers.get("Content-Length", "0"))
                body = self.rfile.read(length)
                try:
                    request = json.loads(body.decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                    response = _error("BAD_REQUEST", f"invalid JSON: {exc}")
                else:
                    response = handle_request(outer.model, outer._lock, request)
                payload = json.dumps(
                    response, sort_keys=True, separators=(",", ":"), ensure_ascii=False
                ).encode("utf-8")
                self.send_response(200)
                self.send_header("Content-Type", "application/json")
                self.send_header("Content-Length", str(len(payload)))
                self.end_headers()
                self.wfile.write(payload)

            def log_message(self, *args) -> None:
                pass

        self._server = ThreadingHTTPServer((host, port), Handler)
        self._server.daemon_threads = True
        bound_host, bound_port = self._server.server_address[:2]
        self.endpoint = f"http://{bound_host}:{bound_port}"
        self._thread: threading.Thread | None = None

    def start(self) -> "BridgeServer":
        self._thread = threading.Thread(target=self._server.serve_forever, daemon=True)
        self._thread.start()
        return self

    def serve_forever(self) -> None:
        self._server.serve_forever()

    def close(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def __enter__(self) -> "BridgeServer":
        return self.start()

    def __exit__(self, *exc_info) -> None:
        self.close()
