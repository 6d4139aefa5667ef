"""Protocol conformance for the embedding sidecar.

The engine must behave identically whether it embeds through the in-process
reference provider or this service, so the engine's own provider-contract
checks run here against a live sidecar over HTTP.
"""

from __future__ import annotations

import socket
import threading
import time

import numpy as np
import pytest
import uvicorn
from fastapi.testclient import TestClient

from embed_sidecar import HashedBackend, Settings, create_app
from triagekit.simindex import RemoteEmbeddingProvider
from triagekit.testing import check_index_contract, check_provider_contract

HASHED = Settings(backend="hashed", hashed_dim=96)


@pytest.fixture(scope="module")
def client() -> TestClient:
    return TestClient(create_app(HASHED))


@pytest.fixture(scope="module")
def live_url():
    """A real uvicorn server on a free local port."""
    with socket.socket() as probe:
        probe.bind(("127.0.0.1", 0))
        port = probe.getsockname()[1]
    config = uvicorn.Config(create_app(HASHED), host="127.0.0.1", port=port, log_level="error")
    server = uvicorn.Server(config)
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("sidecar did not start")
        time.sleep(0.05)
    yield f"http://127.0.0.1:{port}"
    server.should_exit = True
    thread.join(timeout=5)


class TestWireProtocol:
    def test_info_schema(self, client):
        payload = client.get("/info").json()
        assert set(payload) == {"model", "dim"}
        assert payload["model"] == "hashed-bow-d96"
        assert payload["dim"] == 96

    def test_embed_schema_and_cardinality(self, client):
        texts = ["gc pause spike", "jit crash", "docs typo"]
        resp = client.post("/embed", json={"texts": texts})
        assert resp.status_code == 200
        payload = resp.json()
        assert set(payload) == {"model", "dim", "vectors"}
        assert len(payload["vectors"]) == len(texts)
        info_dim = client.get("/info").json()["dim"]
        assert all(len(v) == info_dim for v in payload["vectors"])

    def test_vectors_unit_norm(self, client):
        payload = client.post(
            "/embed", json={"texts": ["watchdog reset after upgrade", "heap corruption"]}
        ).json()
        norms = np.linalg.norm(np.asarray(payload["vectors"]), axis=1)
        np.testing.assert_allclose(norms, 1.0, atol=1e-6)

    def test_identical_texts_identical_vectors(self, client):
        payload = client.post("/embed", json={"texts": ["same text", "same text"]}).json()
        assert payload["vectors"][0] == payload["vectors"][1]

    def test_deterministic_across_requests(self, client):
        first = client.post("/embed", json={"texts": ["stack trace register dump"]}).json()
        second = client.post("/embed", json={"texts": ["stack trace register dump"]}).json()
        assert first["vectors"] == second["vectors"]

    def test_empty_batch_is_400(self, client):
        assert client.post("/embed", json={"texts": []}).status_code == 400

    def test_near_duplicate_ordering(self, client):
        texts = [
            "jit compiler crashes with segmentation fault during method inlining",
            "jit compiler crash segmentation fault while inlining a method",
            "documentation typo in the contributor guide table of contents",
        ]
        vectors = np.asarray(client.post("/embed", json={"texts": texts}).json()["vectors"])
        near = float(vectors[0] @ vectors[1])
        far = float(vectors[0] @ vectors[2])
        assert near > far


class TestModelLoadFailure:
    def test_unloadable_model_gives_500_with_diagnostic(self):
        bad = TestClient(create_app(Settings(backend="sbert", model_name="missing/not-a-model")))
        resp = bad.post("/embed", json={"texts": ["x"]})
        assert resp.status_code == 500
        assert "missing/not-a-model" in resp.json()["detail"]
        assert bad.get("/info").status_code == 500

    def test_unknown_backend_gives_500(self):
        resp = TestClient(create_app(Settings(backend="mystery"))).get("/info")
        assert resp.status_code == 500


class TestEngineAgainstLiveSidecar:
    """The engine's provider test suite, pointed at the sidecar."""

    def test_provider_contract(self, live_url):
        check_provider_contract(RemoteEmbeddingProvider(live_url))

    def test_index_contract(self, live_url, tmp_path):
        check_index_contract(RemoteEmbeddingProvider(live_url), tmp_path)

    def test_remote_matches_in_process_backend(self, live_url):
        provider = RemoteEmbeddingProvider(live_url)
        local = HashedBackend(dim=96)
        texts = ["gc pause in old generation", "unrelated docs change"]
        np.testing.assert_allclose(
            provider.embed_batch(texts), local.encode(texts), atol=1e-12
        )

    def test_full_engine_pipeline_with_remote_provider(self, live_url, tmp_path):
        import json

        from triagekit.config import config_from_dict
        from triagekit.corpus import save_jsonl
        from triagekit.pipeline import Engine
        from triagekit.synthetic import interaction_rescue_corpus

        corpus = interaction_rescue_corpus()
        raw = tmp_path / "raw.jsonl"
        save_jsonl(corpus.train + corpus.test, raw)
        engine = Engine(
            config_from_dict(
                {
                    "raw_path": str(raw),
                    "workdir": str(tmp_path / "work"),
                    "seed": 7,
                    "corpus": {"activity_threshold": 5, "train_fraction": 0.9},
                    "encoders": [
                        {"id": "ngram-a", "kind": "hashed_ngram", "dim": 24,
                         "num_layers": 3, "seq_len": 24},
                    ],
                    "training": {"epochs": 4, "batch_size": 8, "lr_scale": 800,
                                 "seed": 7, "n_classifiers": 2,
                                 "head": {"n_filters": 8, "dropout": 0.0}},
                    "provider": {"kind": "remote", "url": live_url},
                    "ibr": {"tau": 0.4, "decay_rate": 0.01},
                    "aggregation": {"method": "wra", "weight": 0.65},
                }
            )
        )
        engine.ingest()
        engine.train()
        index = engine.build_index()
        assert index.provider_id == "hashed-bow-d96"
        report = engine.evaluate()
        assert report["topk"]["hybrid"]["1"] >= report["topk"]["content"]["1"]
        out = engine.recommend("runtime crash alphafault kernel panic", "watchdog", k=2)
        assert len(out["candidates"]) == 2
