"""Protocol client: score against a model served elsewhere.

Endpoints: ``http://host:port`` / ``https://...`` for HTTP POST transport,
``tcp://host:port`` for newline-delimited JSON over a socket. Requests are
pure functions of their input on the server side, so transport failures
are retried verbatim; protocol-level errors are never retried.
"""

from __future__ import annotations

import json
import socket
import threading
from dataclasses import dataclass
from typing import Any, Sequence
from urllib.parse import urlparse

import requests

from ..errors import BackendFailure, EmptyText, SequenceTooLong
from ..scoring import MaskedLogprobVector, TokenizedSequence
from .base import MaskedLmBackend, validate_positions
from .protocol import (
    ERROR_TOO_LONG,
    PROTOCOL_VERSION,
    canonical_json,
)


@dataclass(frozen=True)
class RemoteBackendConfig:
    """Connection settings for a remote scoring endpoint."""

    endpoint: str
    timeout: float = 30.0
    max_batch_positions: int = 128
    retry_count: int = 2
    max_inflight: int = 8

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be > 0")
        if self.max_batch_positions < 1:
            raise ValueError("max_batch_positions must be >= 1")
        if self.retry_count < 0:
            raise ValueError("retry_count must be >= 0")
        if self.max_inflight < 1:
            raise ValueError("max_inflight must be >= 1")


class RemoteBackend(MaskedLmBackend):
    """MaskedLmBackend speaking the wire protocol to a remote server.

    The handshake at construction fills in the served model's name, token
    maximum, and concurrency declaration. Tokenization happens server-side;
    client-side sequences carry position indices as opaque token ids and no
    surface offsets (so windowed scoring is not available over this
    backend).
    """

    def __init__(self, config: RemoteBackendConfig) -> None:
        self.config = config
        parsed = urlparse(config.endpoint)
        if parsed.scheme in ("http", "https"):
            self._transport = self._http_roundtrip
        elif parsed.scheme == "tcp":
            self._host = parsed.hostname or "127.0.0.1"
            self._port = parsed.port
            if self._port is None:
                raise ValueError(f"tcp endpoint {config.endpoint!r} needs a port")
            self._transport = self._tcp_roundtrip
        else:
            raise ValueError(f"unsupported endpoint scheme {parsed.scheme!r}")
        self._inflight = threading.Semaphore(config.max_inflight)

        info = self._roundtrip({"v": PROTOCOL_VERSION, "op": "info"})
        for field in ("model", "max_tokens", "concurrent_safe"):
            if field not in info:
                raise BackendFailure(f"info response missing {field!r}: {info!r}")
        super().__init__(
            name=str(info["model"]),
            max_tokens=int(info["max_tokens"]),
            concurrent_safe=bool(info["concurrent_safe"]),
        )

    # --- transports ---------------------------------------------------

    def _http_roundtrip(self, payload: str) -> str:
        response = requests.post(
            self.config.endpoint,
            data=payload.encode("utf-8"),
            headers={"Content-Type": "application/json"},
            timeout=self.config.timeout,
        )
        response.raise_for_status()
        return response.text

    def _tcp_roundtrip(self, payload: str) -> str:
        with socket.create_connection((self._host, self._port), timeout=self.config.timeout) as conn:
            conn.sendall(payload.encode("utf-8") + b"\n")
            reader = conn.makefile("rb")
            line = reader.readline()
        if not line:
            raise ConnectionError("server closed connection without replying")
        return line.decode("utf-8")

    def _roundtrip(self, request: dict[str, Any]) -> dict[str, Any]:
        payload = canonical_json(request)
        last_error: Exception | None = None
        for _ in range(self.config.retry_count + 1):
            try:
                with self._inflight:
                    raw = self._transport(payload)
                break
            except (OSError, requests.RequestException) as exc:
                last_error = exc
        else:
            raise BackendFailure(
                f"endpoint {self.config.endpoint} unreachable after "
                f"{self.config.retry_count + 1} attempts: {last_error}"
            ) from last_error

        try:
            response = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise BackendFailure(f"invalid JSON from server: {exc}") from exc
        if not isinstance(response, dict) or response.get("v") != PROTOCOL_VERSION:
            raise BackendFailure(f"unexpected response: {response!r}")
        if "error" in response:
            code = response["error"]
            message = response.get("message", "")
            if code == ERROR_TOO_LONG:
                raise SequenceTooLong(message)
            raise BackendFailure(f"{code}: {message}")
        return response

    # --- backend contract ----------------------------------------------

    def _score_request(self, text: str, positions: Sequence[int] | str) -> dict[str, Any]:
        return self._roundtrip(
            {
                "v": PROTOCOL_VERSION,
                "op": "masked_logprobs",
                "text": text,
                "positions": positions if isinstance(positions, str) else list(positions),
            }
        )

    def tokenize(self, text: str) -> TokenizedSequence:
        if not text.strip():
            raise EmptyText("text is empty after trimming")
        response = self._score_request(text, [])
        count = int(response["token_count"])
        scoreable = [bool(flag) for flag in response["scoreable"]]
        if count < 1 or len(scoreable) != count:
            raise BackendFailure(f"inconsistent tokenization response: {response!r}")
        return TokenizedSequence(
            tokens=tuple(range(count)),
            surface=text,
            scoreable_mask=tuple(scoreable),
            offsets=None,
        )

    def masked_logprobs(
        self, seq: TokenizedSequence, positions: Sequence[int]
    ) -> MaskedLogprobVector:
        self.check_length(seq)
        cleaned = validate_positions(positions, len(seq))
        logprobs: list[float] = []
        answered: list[int] = []
        step = self.config.max_batch_positions
        for start in range(0, len(cleaned), step):
            chunk = cleaned[start : start + step]
            response = self._score_request(seq.surface, chunk)
            if int(response["token_count"]) != len(seq):
                raise BackendFailure(
                    f"server token count {response['token_count']} != client view {len(seq)}"
                )
            if [int(p) for p in response["positions"]] != chunk:
                raise BackendFailure(
                    f"server answered positions {response['positions']}, requested {chunk}"
                )
            answered.extend(chunk)
            logprobs.extend(float(v) for v in response["logprobs"])
        return MaskedLogprobVector(tuple(logprobs), tuple(answered))
