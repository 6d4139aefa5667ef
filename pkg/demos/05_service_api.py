#!/usr/bin/env python3
"""Serving recommendations: the engine behind the HTTP API.

Prepares artifacts for the planted corpus, then exercises the same code
paths the HTTP service exposes: POST /recommend payloads in and candidate
lists with score breakdowns out, plus the retraining trigger rule.

To run the real server instead:  triagekit serve --config <config.json>
then:  curl -s localhost:8123/recommend -d '{"title": "...", "k": 3}' \
             -H 'content-type: application/json'
"""

import json
import tempfile
from pathlib import Path

from triagekit import Engine, load_config, retrain_trigger
from triagekit.corpus import save_jsonl
from triagekit.synthetic import interaction_rescue_corpus


def engine_config(raw_path: Path, workdir: Path) -> dict:
    return {
        "raw_path": str(raw_path),
        "workdir": str(workdir),
        "seed": 7,
        "corpus": {"activity_threshold": 5, "train_fraction": 0.9},
        "encoders": [
            {"id": "ngram-a", "kind": "hashed_ngram", "dim": 24, "num_layers": 3, "seq_len": 24},
            {"id": "toy-b", "kind": "trainable", "dim": 24, "num_layers": 3, "seq_len": 24, "seed": 11},
        ],
        "training": {
            "epochs": 4, "batch_size": 8, "lr_scale": 800, "seed": 7,
            "n_classifiers": 2, "head": {"n_filters": 8, "dropout": 0.0},
        },
        "provider": {"kind": "hashed_bow", "dim": 128},
        "ibr": {"tau": 0.4, "decay_rate": 0.01},
        "aggregation": {"method": "wra", "weight": 0.65},
        "tuner": {
            "objective_k": 1,
            "validation_fraction": 0.09,
            "mode": "subset",
            "fixed": {"tau": 0.4, "decay_rate": 0.01, "ip_assignment": 0.5,
                      "ip_commit": 1.5, "ip_discussion": 0.2},
        },
    }


def main() -> None:
    corpus = interaction_rescue_corpus()
    with tempfile.TemporaryDirectory() as tmp:
        tmp_path = Path(tmp)
        raw = tmp_path / "raw.jsonl"
        save_jsonl(corpus.train + corpus.test, raw)
        config_path = tmp_path / "config.json"
        config_path.write_text(json.dumps(engine_config(raw, tmp_path / "work")))
        engine = Engine(load_config(config_path))
        engine.ingest()
        engine.train()
        engine.build_index()
        engine.tune()

        request = {
            "title": "runtime crash alphafault kernel panic",
            "description": "memory fault stack trace watchdog reset after upgrade",
            "k": 3,
        }
        print("request:", json.dumps(request, indent=2))
        response = engine.recommend(request["title"], request["description"], request["k"])
        print("response:", json.dumps(response, indent=2))

        print("\nretraining trigger (new joiners only, at 20 resolved issues):")
        known = ["alice", "bob", "carol"]
        for counts in ({"dana": 19}, {"dana": 20}, {"alice": 300}):
            decision = retrain_trigger(counts, known)
            print(f"  resolved counts {counts} -> retrain={decision.should_retrain}")


if __name__ == "__main__":
    main()
