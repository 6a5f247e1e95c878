"""Masked-LM backends: the scoring contract and its implementations."""

from .base import MaskedLmBackend, whitespace_tokens
from .remote import RemoteBackend, RemoteBackendConfig
from .server import ServerHandle, serve_backend
from .table import HOLE, TableBackend
from .unigram import UnigramBackend, load_counts, unigram_backend
from .windowed import WindowedBackend, window_starts, windowed_masked_logprobs

__all__ = [
    "HOLE",
    "MaskedLmBackend",
    "RemoteBackend",
    "RemoteBackendConfig",
    "ServerHandle",
    "TableBackend",
    "UnigramBackend",
    "WindowedBackend",
    "load_counts",
    "serve_backend",
    "unigram_backend",
    "whitespace_tokens",
    "window_starts",
    "windowed_masked_logprobs",
]
