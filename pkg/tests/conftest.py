"""Shared fixtures: a small planted corpus driven through the full engine."""

from __future__ import annotations

import pytest

from triagekit.config import config_from_dict
from triagekit.corpus import save_jsonl
from triagekit.pipeline import Engine
from triagekit.synthetic import interaction_rescue_corpus


def rescue_engine_config(raw_path, workdir, seed: int = 7) -> dict:
    return {
        "raw_path": str(raw_path),
        "workdir": str(workdir),
        "seed": seed,
        "corpus": {"activity_threshold": 5, "train_fraction": 0.9},
        "encoders": [
            {"id": "ngram-a", "kind": "hashed_ngram", "dim": 24, "num_layers": 3, "seq_len": 24},
            {"id": "toy-b", "kind": "trainable", "dim": 24, "num_layers": 3, "seq_len": 24, "seed": 11},
        ],
        "training": {
            "epochs": 4,
            "batch_size": 8,
            "lr_scale": 800,
            "seed": seed,
            "n_classifiers": 2,
            "head": {"n_filters": 8, "dropout": 0.0},
        },
        "provider": {"kind": "hashed_bow", "dim": 128},
        "ibr": {"tau": 0.4, "decay_rate": 0.01},
        "aggregation": {"method": "wra", "weight": 0.65},
        "tuner": {
            "objective_k": 1,
            "validation_fraction": 0.09,
            "mode": "subset",
            "fixed": {
                "tau": 0.4,
                "decay_rate": 0.01,
                "ip_assignment": 0.5,
                "ip_commit": 1.5,
                "ip_discussion": 0.2,
            },
        },
    }


def build_rescue_engine(tmp_path, seed: int = 7) -> tuple[Engine, object]:
    corpus = interaction_rescue_corpus()
    tmp_path.mkdir(parents=True, exist_ok=True)
    raw = tmp_path / "raw.jsonl"
    save_jsonl(corpus.train + corpus.test, raw)
    config = config_from_dict(rescue_engine_config(raw, tmp_path / "work", seed))
    return Engine(config), corpus


@pytest.fixture(scope="session")
def rescue_engine(tmp_path_factory):
    """A fully trained, indexed, and tuned engine over the planted corpus."""
    tmp = tmp_path_factory.mktemp("rescue")
    engine, corpus = build_rescue_engine(tmp)
    engine.ingest()
    engine.train()
    engine.build_index()
    engine.tune()
    return engine, corpus
