"""Embedding backends.

``SbertBackend`` wraps a pretrained sentence encoder (the default service
backend). ``HashedBackend`` is a deterministic, dependency-free fallback for
air-gapped environments and protocol tests: hashed token counts projected to
the unit sphere. Both emit L2-normalized float vectors.
"""

from __future__ import annotations

import re
from hashlib import blake2b
from typing import Protocol, Sequence

import numpy as np

_TOKEN_RE = re.compile(r"[a-z0-9]+")


class BackendLoadError(RuntimeError):
    """The configured model could not be loaded; carries the diagnostic."""


class Backend(Protocol):
    name: str
    dim: int

    def encode(self, texts: Sequence[str]) -> np.ndarray: ...


def _unit_rows(vectors: np.ndarray) -> np.ndarray:
    vectors = np.asarray(vectors, dtype=np.float64)
    norms = np.linalg.norm(vectors, axis=1, keepdims=True)
    return np.divide(vectors, norms, out=vectors.copy(), where=norms > 0)


class HashedBackend:
    """Feature-hashed bag of tokens, unit-normalized. Deterministic across
    processes (keyed blake2b, not the salted builtin hash)."""

    def __init__(self, dim: int = 384):
        if dim <= 0:
            raise ValueError(f"dim must be positive, got {dim}")
        self.dim = dim
        self.name = f"hashed-bow-d{dim}"

    def _bucket(self, token: str) -> int:
        digest = blake2b(f"{self.name}\x1f{token}".encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little") % self.dim

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            for token in _TOKEN_RE.findall(text.lower()):
                out[row, self._bucket(token)] += 1.0
        return _unit_rows(out)


class SbertBackend:
    """Pretrained sentence encoder loaded once at startup."""

    def __init__(self, model_name: str = "all-mpnet-base-v2"):
        try:
            from sentence_transformers import SentenceTransformer
        except ImportError as exc:
            raise BackendLoadError(
                f"sentence-transformers is not installed: {exc}"
            ) from exc
        try:
            self._model = SentenceTransformer(model_name)
        except Exception as exc:
            raise BackendLoadError(
                f"failed to load sentence encoder {model_name!r}: {exc}"
            ) from exc
        self.name = model_name
        self.dim = int(self._model.get_sentence_embedding_dimension())

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        vectors = self._model.encode(list(texts), convert_to_numpy=True)
        return _unit_rows(np.asarray(vectors, dtype=np.float64))


def load_backend(kind: str, model_name: str, hashed_dim: int) -> Backend:
    if kind == "hashed":
        return HashedBackend(dim=hashed_dim)
    if kind == "sbert":
        return SbertBackend(model_name)
    raise BackendLoadError(f"unknown backend kind {kind!r}")
