"""Cosine-similarity retrieval over precomputed issue embeddings.

Embeddings come from a pluggable provider: the in-process hashed
bag-of-words reference, or any HTTP service implementing the embedding
protocol (``GET /info`` handshake, ``POST /embed`` batch endpoint).
Vectors are unit-normalized at build time so retrieval is an exact dot
product scan.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Protocol, Sequence, runtime_checkable

import httpx
import numpy as np

from .corpus import BugReport, parse_rfc3339
from .encoders import stable_hash, _TOKEN_RE
from .errors import (
    ConfigError,
    DegenerateVectorError,
    IndexBuildError,
    ProviderError,
    RetrievalError,
)

UNIT_NORM_TOL = 1e-6


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity; zero-norm inputs are rejected."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        raise DegenerateVectorError("cosine undefined for zero-norm vector")
    return float(np.dot(u, v) / (nu * nv))


@runtime_checkable
class EmbeddingProvider(Protocol):
    id: str
    dim: int

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray: ...


class HashedBowProvider:
    """Reference provider: hashed token counts projected to the unit sphere.

    Identical normalized texts map to identical vectors; texts without
    tokens map to the zero vector (rejected downstream where a direction
    is required).
    """

    def __init__(self, dim: int = 256):
        if dim <= 0:
            raise ConfigError(f"provider dim must be positive, got {dim}")
        self.dim = dim
        self.id = f"hashed-bow-d{dim}"

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        out = np.zeros((len(texts), self.dim), dtype=np.float64)
        for row, text in enumerate(texts):
            for tok in _TOKEN_RE.findall(text.lower()):
                out[row, stable_hash(tok, self.id) % self.dim] += 1.0
        norms = np.linalg.norm(out, axis=1, keepdims=True)
        np.divide(out, norms, out=out, where=norms > 0)
        return out


class RemoteEmbeddingProvider:
    """Client for an external embedding service speaking the wire protocol.

    Handshake: ``GET /info`` -> ``{"model", "dim"}``. Batch embedding:
    ``POST /embed`` with ``{"texts": [...]}`` ->
    ``{"model", "dim", "vectors"}``.
    """

    def __init__(self, base_url: str, timeout: float = 30.0, client: httpx.Client | None = None):
        self.base_url = base_url.rstrip("/")
        self._client = client or httpx.Client(timeout=timeout)
        try:
            resp = self._client.get(f"{self.base_url}/info")
            resp.raise_for_status()
            info = resp.json()
            self.id = str(info["model"])
            self.dim = int(info["dim"])
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise ProviderError(f"embedding provider handshake failed at {base_url}: {exc}") from exc

    def embed_batch(self, texts: Sequence[str]) -> np.ndarray:
        try:
            resp = self._client.post(f"{self.base_url}/embed", json={"texts": list(texts)})
            resp.raise_for_status()
            payload = resp.json()
            vectors = np.asarray(payload["vectors"], dtype=np.float64)
        except (httpx.HTTPError, KeyError, ValueError) as exc:
            raise ProviderError(f"embedding request failed at {self.base_url}: {exc}") from exc
        if vectors.shape != (len(texts), self.dim):
            raise ProviderError(
                f"provider returned shape {vectors.shape}, expected {(len(texts), self.dim)}"
            )
        return vectors


@dataclass
class SimilarityIndex:
    """Unit-norm embeddings of training issues for exact cosine retrieval."""

    provider_id: str
    dim: int
    ids: tuple[str, ...]
    created_at: tuple[datetime, ...]
    vectors: np.ndarray
    provider: EmbeddingProvider | None = None

    def __len__(self) -> int:
        return len(self.ids)

    @classmethod
    def build(cls, reports: Sequence[BugReport], provider: EmbeddingProvider) -> "SimilarityIndex":
        """Embed every report and normalize rows; rebuilds are idempotent."""
        try:
            vectors = provider.embed_batch([r.text for r in reports])
        except ProviderError:
            raise
        except Exception as exc:  # pragma: no cover - defensive
            raise ProviderError(f"provider {provider.id!r} failed: {exc}") from exc
        if vectors.shape != (len(reports), provider.dim):
            raise IndexBuildError(
                f"provider emitted shape {vectors.shape}, expected {(len(reports), provider.dim)}"
            )
        norms = np.linalg.norm(vectors, axis=1)
        for report, norm in zip(reports, norms):
            if norm == 0.0:
                raise IndexBuildError(f"report {report.id!r} embeds to the zero vector")
        vectors = vectors / norms[:, None]
        return cls(
            provider_id=provider.id,
            dim=provider.dim,
            ids=tuple(r.id for r in reports),
            created_at=tuple(r.created_at for r in reports),
            vectors=vectors,
            provider=provider,
        )

    def query(self, query_vec: np.ndarray, tau: float) -> list[tuple[str, float]]:
        """All entries with cosine >= tau, similarity descending, ties by id."""
        if not 0.0 <= tau <= 1.0:
            raise ConfigError(f"similarity threshold must be in [0, 1], got {tau}")
        norm = float(np.linalg.norm(query_vec))
        if norm == 0.0:
            raise DegenerateVectorError("query embeds to the zero vector")
        sims = np.clip(self.vectors @ (np.asarray(query_vec, dtype=np.float64) / norm), -1.0, 1.0)
        hits = [(self.ids[i], float(s)) for i, s in enumerate(sims) if s >= tau]
        hits.sort(key=lambda pair: (-pair[1], pair[0]))
        return hits

    def save(self, path: str | Path) -> None:
        header = {
            "format_version": 1,
            "provider_id": self.provider_id,
            "dim": self.dim,
            "count": len(self.ids),
            "ids": list(self.ids),
            "created_at": [t.isoformat() for t in self.created_at],
        }
        with open(path, "wb") as fh:
            fh.write(json.dumps(header, sort_keys=True).encode("utf-8") + b"\n")
            fh.write(np.ascontiguousarray(self.vectors, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str | Path, provider: EmbeddingProvider | None = None) -> "SimilarityIndex":
        with open(path, "rb") as fh:
            header = json.loads(fh.readline().decode("utf-8"))
            raw = fh.read()
        dim, count = header["dim"], header["count"]
        vectors = np.frombuffer(raw, dtype="<f8").reshape(count, dim).copy()
        if provider is not None and (provider.id != header["provider_id"] or provider.dim != dim):
            raise IndexBuildError(
                f"index built with provider {header['provider_id']!r} (dim {dim}) but "
                f"loaded with {provider.id!r} (dim {provider.dim})"
            )
        return cls(
            provider_id=header["provider_id"],
            dim=dim,
            ids=tuple(header["ids"]),
            created_at=tuple(parse_rfc3339(t) for t in header["created_at"]),
            vectors=vectors,
            provider=provider,
        )


def build_index(reports: Sequence[BugReport], provider: EmbeddingProvider) -> SimilarityIndex:
    return SimilarityIndex.build(reports, provider)


def retrieve_similar(
    new_issue: BugReport, index: SimilarityIndex, tau: float
) -> list[tuple[str, float]]:
    """Issues similar to a new report: exactly those with cosine >= tau."""
    if len(index) == 0:
        raise RetrievalError("similarity index is empty")
    if index.provider is None:
        raise RetrievalError("index has no attached embedding provider")
    try:
        query_vec = index.provider.embed_batch([new_issue.text])[0]
    except ProviderError as exc:
        raise RetrievalError(f"provider failure during retrieval: {exc}") from exc
    return index.query(query_vec, tau)
