"""In-process protocol servers wrapping any backend, for loopback testing.

Two transports, one request handler: newline-delimited JSON over TCP, and
HTTP POST. Used by the test suite to verify protocol transparency and by
anyone who wants to expose a desk-scale backend on the network.
"""

from __future__ import annotations

import json
import socketserver
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

from .base import MaskedLmBackend
from .protocol import ERROR_BAD_REQUEST, canonical_json, error_response, handle_request


class ServerHandle:
    """A running server plus its endpoint string; context manager closes it."""

    def __init__(self, server, endpoint: str) -> None:
        self._server = server
        self.endpoint = endpoint
        self._thread = threading.Thread(target=server.serve_forever, daemon=True)
        self._thread.start()

    def close(self) -> None:
        self._server.shutdown()
        self._server.server_close()
        self._thread.join(timeout=5)

    def __enter__(self) -> "ServerHandle":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()


def _ndjson_handler(backend: MaskedLmBackend):
    class Handler(socketserver.StreamRequestHandler):
        def handle(self) -> None:
            for raw in self.rfile:
                line = raw.strip()
                if not line:
                    continue
                try:
                    request = json.loads(line.decode("utf-8"))
                except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                    response = error_response(ERROR_BAD_REQUEST, f"invalid JSON: {exc}")
                else:
                    response = handle_request(backend, request)
                self.wfile.write(canonical_json(response).encode("utf-8") + b"\n")
                self.wfile.flush()

    return Handler


def _http_handler(backend: MaskedLmBackend):
    class Handler(BaseHTTPRequestHandler):
        def do_POST(self) -> None:  # noqa: N802 (http.server API)
            length = int(self.headers.get("Content-Length", "0"))
            body = self.rfile.read(length)
            try:
                request = json.loads(body.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                response = error_response(ERROR_BAD_REQUEST, f"invalid JSON: {exc}")
            else:
                response = handle_request(backend, request)
            payload = canonical_json(response).encode("utf-8")
            self.send_response(200)
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(payload)))
            self.end_headers()
            self.wfile.write(payload)

        def log_message(self, *args) -> None:  # silence per-request stderr noise
            pass

    return Handler


def serve_backend(
    backend: MaskedLmBackend,
    host: str = "127.0.0.1",
    port: int = 0,
    transport: str = "tcp",
) -> ServerHandle:
    """Start serving ``backend`` on ``host:port`` (port 0 picks a free one)."""
    if transport == "tcp":
        server = socketserver.ThreadingTCPServer(
            (host, port), _ndjson_handler(backend), bind_and_activate=True
        )
        server.daemon_threads = True
        bound_host, bound_port = server.server_address[:2]
        return ServerHandle(server, f"tcp://{bound_host}:{bound_port}")
    if transport == "http":
        server = ThreadingHTTPServer((host, port), _http_handler(backend))
        server.daemon_threads = True
        bound_host, bound_port = server.server_address[:2]
        return ServerHandle(server, f"http://{bound_host}:{bound_port}")
    raise ValueError(f"unknown transport {transport!r} (expected 'tcp' or 'http')")
