"""FastAPI application serving the embedding-provider protocol."""

from __future__ import annotations

import os
from dataclasses import dataclass

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel

from .backends import Backend, BackendLoadError, load_backend


@dataclass(frozen=True)
class Settings:
    backend: str = "sbert"
    model_name: str = "all-mpnet-base-v2"
    hashed_dim: int = 384
    port: int = 8900

    @classmethod
    def from_env(cls) -> "Settings":
        return cls(
            backend=os.environ.get("SIDECAR_BACKEND", "sbert"),
            model_name=os.environ.get("SIDECAR_MODEL", "all-mpnet-base-v2"),
            hashed_dim=int(os.environ.get("SIDECAR_DIM", "384")),
            port=int(os.environ.get("SIDECAR_PORT", "8900")),
        )


class EmbedRequest(BaseModel):
    texts: list[str]


def create_app(settings: Settings | None = None) -> FastAPI:
    settings = settings or Settings.from_env()
    app = FastAPI(title="embed-sidecar")

    # Load once at startup; a failed load keeps the server up but every
    # endpoint reports the diagnostic.
    backend: Backend | None = None
    load_error: str | None = None
    try:
        backend = load_backend(settings.backend, settings.model_name, settings.hashed_dim)
    except BackendLoadError as exc:
        load_error = str(exc)

    def require_backend() -> Backend:
        if backend is None:
            raise HTTPException(status_code=500, detail=load_error)
        return backend

    @app.get("/info")
    def info() -> dict:
        loaded = require_backend()
        return {"model": loaded.name, "dim": loaded.dim}

    @app.post("/embed")
    def embed(request: EmbedRequest) -> dict:
        loaded = require_backend()
        if not request.texts:
            raise HTTPException(status_code=400, detail="empty batch")
        vectors = loaded.encode(request.texts)
        return {
            "model": loaded.name,
            "dim": loaded.dim,
            "vectors": [[float(x) for x in row] for row in vectors],
        }

    return app
