"""HTTP front-end for the recommendation engine."""

from __future__ import annotations

from fastapi import FastAPI, HTTPException
from pydantic import BaseModel, Field

from .errors import InputError, ServiceUnavailableError
from .pipeline import Engine


class RecommendRequest(BaseModel):
    title: str = ""
    description: str = ""
    k: int = Field(default=5, ge=1)


def create_app(engine: Engine) -> FastAPI:
    app = FastAPI(title="triagekit")

    @app.get("/health")
    def health() -> dict:
        ready = engine.path("model.npz").exists() and engine.path("index.bin").exists()
        return {"status": "ok" if ready else "not_ready", "mode": engine.config.label_mode}

    @app.post("/recommend")
    def recommend(request: RecommendRequest) -> dict:
        try:
            return engine.recommend(request.title, request.description, request.k)
        except InputError as exc:
            raise HTTPException(status_code=400, detail=str(exc)) from exc
        except ServiceUnavailableError as exc:
            raise HTTPException(status_code=503, detail=str(exc)) from exc

    return app
