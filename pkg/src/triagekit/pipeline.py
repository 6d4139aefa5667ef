"""End-to-end engine: ingest -> train -> index -> tune -> evaluate -> recommend.

All artifacts live under the configured work directory:

    train.jsonl / test.jsonl   chronological splits
    manifest.json              ingestion counts
    model.npz                  trained content-ranker checkpoint
    index.bin                  similarity index
    best_params.json           tuned parameters plus the full search table,
                               consumed at recommendation time
    tuning_table.csv           the search table again, for spreadsheets
    eval_report.json           evaluation metrics
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from . import corpus as corpus_mod
from .aggregate import borda, wra
from .cbr import CBRModel, cbr_train, load_checkpoint, save_checkpoint
from .config import EngineConfig
from .corpus import BugReport, filter_and_split, load_jsonl, sampling_weights, save_jsonl
from .errors import InputError, ServiceUnavailableError, TunerError
from .ibr import InteractionPointTable, interaction_scores, normalize_scores
from .simindex import (
    HashedBowProvider,
    RemoteEmbeddingProvider,
    SimilarityIndex,
    retrieve_similar,
)
from .tuner import GridPoint, HyperParamGrid, TuneResult, grid_search

logger = logging.getLogger("triagekit")

RETRAIN_THRESHOLD = 20


@dataclass(frozen=True)
class RetrainDecision:
    should_retrain: bool
    triggering_developers: tuple[str, ...]


def retrain_trigger(
    new_resolved: Mapping[str, int],
    known_developers: Sequence[str],
    threshold: int = RETRAIN_THRESHOLD,
) -> RetrainDecision:
    """Retraining becomes eligible once a previously-unseen developer has
    resolved at least ``threshold`` issues; counts for known developers never
    trigger."""
    known = set(known_developers)
    triggering = tuple(
        sorted(dev for dev, count in new_resolved.items() if dev not in known and count >= threshold)
    )
    return RetrainDecision(should_retrain=bool(triggering), triggering_developers=triggering)


class Engine:
    """Holds the config and lazily loaded runtime artifacts."""

    def __init__(self, config: EngineConfig):
        config.validate(require_raw=False)
        self.config = config
        self.workdir = Path(config.workdir)
        self._model: CBRModel | None = None
        self._index: SimilarityIndex | None = None
        self._train_reports: list[BugReport] | None = None

    # -- artifact paths ------------------------------------------------------

    def path(self, name: str) -> Path:
        return self.workdir / name

    # -- provider / label helpers ---------------------------------------------

    def build_provider(self):
        cfg = self.config.provider
        if cfg.kind == "hashed_bow":
            return HashedBowProvider(dim=cfg.dim)
        return RemoteEmbeddingProvider(cfg.url)

    def label_of(self, report: BugReport) -> str | None:
        if self.config.label_mode == "component":
            return report.components[0] if report.components else None
        return report.owner

    # -- pipeline stages -------------------------------------------------------

    def ingest(self) -> dict:
        """Load the raw JSONL, resolve owners, filter, split, and persist."""
        self.config.validate(require_raw=True)
        self.workdir.mkdir(parents=True, exist_ok=True)
        cc = self.config.corpus
        raw = load_jsonl(self.config.raw_path)
        resolved = [r for r in raw if r.owner is not None]
        train, test = filter_and_split(
            resolved,
            threshold=cc.activity_threshold,
            train_fraction=cc.train_fraction,
            min_words=cc.min_words,
        )
        save_jsonl(train, self.path("train.jsonl"))
        save_jsonl(test, self.path("test.jsonl"))
        profiles = corpus_mod.developer_profiles(resolved, cc.activity_threshold)
        manifest = {
            "total": len(raw),
            "resolved": len(resolved),
            "discarded_no_owner": len(raw) - len(resolved),
            "train": len(train),
            "test": len(test),
            "active_developers": sum(1 for p in profiles.values() if p.active),
            "threshold": cc.activity_threshold,
            "train_fraction": cc.train_fraction,
            "min_words": cc.min_words,
        }
        self.path("manifest.json").write_text(json.dumps(manifest, sort_keys=True, indent=2) + "\n")
        logger.info("ingested corpus", extra={"payload": manifest})
        return manifest

    def load_split(self, name: str) -> list[BugReport]:
        path = self.path(f"{name}.jsonl")
        if not path.exists():
            raise ServiceUnavailableError(f"missing split file {path}; run ingest first")
        return load_jsonl(path)

    def train(self) -> CBRModel:
        train_reports = self.load_split("train")
        if self.config.tuner.holdout_validation:
            train_reports, _ = self.split_validation(train_reports)
        if self.config.label_mode == "component":
            train_reports = [r for r in train_reports if r.components]
        weights = sampling_weights(train_reports) if self.config.label_mode == "developer" else None
        if weights is None:
            # Component mode keeps inverse-frequency balancing over components.
            from collections import Counter

            freq = Counter(self.label_of(r) for r in train_reports)
            inv = np.array([1.0 / freq[self.label_of(r)] for r in train_reports])
            probs = inv / inv.sum()
        else:
            probs = weights.probabilities
        model, history = cbr_train(
            train_reports,
            probs,
            self.config.encoders,
            self.config.training,
            label_of=self.label_of,
        )
        save_checkpoint(model, self.path("model.npz"), self.config.training)
        logger.info(
            "trained content ranker",
            extra={"payload": {"steps": len(history.losses), "final_loss": history.losses[-1]}},
        )
        self._model = model
        return model

    def build_index(self) -> SimilarityIndex:
        train_reports = self.load_split("train")
        index = SimilarityIndex.build(train_reports, self.build_provider())
        index.save(self.path("index.bin"))
        self._index = index
        return index

    # -- runtime loading -------------------------------------------------------

    def model(self) -> CBRModel:
        if self._model is None:
            path = self.path("model.npz")
            if not path.exists():
                raise ServiceUnavailableError(f"model checkpoint missing at {path}")
            self._model = load_checkpoint(path)
        return self._model

    def index(self) -> SimilarityIndex:
        if self._index is None:
            path = self.path("index.bin")
            if not path.exists():
                raise ServiceUnavailableError(f"similarity index missing at {path}")
            self._index = SimilarityIndex.load(path, provider=self.build_provider())
        return self._index

    def train_reports_by_id(self) -> dict[str, BugReport]:
        if self._train_reports is None:
            self._train_reports = self.load_split("train")
        return {r.id: r for r in self._train_reports}

    def runtime_params(self) -> dict:
        """IBR/aggregation parameters, preferring tuned values when present."""
        params = {
            "tau": self.config.ibr.tau,
            "decay_rate": self.config.ibr.decay_rate,
            "ip_assignment": self.config.ibr.ip_assignment,
            "ip_commit": self.config.ibr.ip_commit,
            "ip_discussion": self.config.ibr.ip_discussion,
            "weight": self.config.aggregation_weight,
        }
        best_path = self.path("best_params.json")
        if best_path.exists():
            best = json.loads(best_path.read_text())["best"]
            params.update({k: best[k] for k in params if k in best})
        return params

    # -- scoring ----------------------------------------------------------------

    def _events_before(self, report: BugReport, now: datetime) -> BugReport:
        kept = tuple(e for e in report.events if e.occurred_at <= now)
        if len(kept) == len(report.events):
            return report
        return BugReport(
            id=report.id,
            title=report.title,
            description=report.description,
            created_at=report.created_at,
            owner=report.owner,
            components=report.components,
            events=kept,
            text=report.text,
        )

    def score_report(
        self,
        report: BugReport,
        params: dict,
        now: datetime | None = None,
    ) -> dict:
        """Full hybrid scoring for one report at a point in time.

        ``now`` defaults to the report's creation time during evaluation so
        later interactions never leak into the ranking.
        """
        model = self.model()
        index = self.index()
        now = now or report.created_at
        nps = model.predict_nps(report.text)
        if self.config.label_mode == "developer":
            by_id = self.train_reports_by_id()
            similar_pairs = retrieve_similar(report, index, params["tau"])
            similar = [
                (self._events_before(by_id[issue_id], now), sim)
                for issue_id, sim in similar_pairs
                if issue_id in by_id
            ]
            table = InteractionPointTable(
                assignment=params["ip_assignment"],
                commit_or_pr=params["ip_commit"],
                discussion=params["ip_discussion"],
            )
            raw = interaction_scores(
                report, similar, table, params["decay_rate"], model.label_space, now
            )
            nis = normalize_scores(raw)
        else:
            # Component labels have no interaction history of their own.
            nis = {label: 0.0 for label in model.label_space}
        scores = wra(nps, nis, params["weight"])
        cbr_ranking = model.ranked_labels(nps)
        if self.config.aggregation_method == "borda":
            ibr_ranking = sorted(nis, key=lambda dev: (-nis[dev], dev))
            final_ranking = borda(cbr_ranking, ibr_ranking)
        else:
            final_ranking = list(scores.ranked)
        return {
            "nps": nps,
            "nis": nis,
            "fs": scores.fs,
            "ranking": final_ranking,
            "cbr_ranking": cbr_ranking,
            "ibr_ranking": sorted(nis, key=lambda dev: (-nis[dev], dev)),
        }

    # -- tuning -----------------------------------------------------------------

    def split_validation(
        self, train_reports: list[BugReport]
    ) -> tuple[list[BugReport], list[BugReport]]:
        """Split off the chronological tail of the training split (below 10
        percent of it) as the tuning validation set."""
        frac = self.config.tuner.validation_fraction
        n_val = max(1, int(math.floor(frac * len(train_reports))))
        return train_reports[:-n_val], train_reports[-n_val:]

    def tune(self, grid: HyperParamGrid | None = None) -> TuneResult:
        train_reports = self.load_split("train")
        _, validation = self.split_validation(train_reports)
        if not validation:
            raise TunerError("empty validation split")
        if grid is None:
            base = HyperParamGrid(objective_k=self.config.tuner.objective_k)
            grid = base.with_fixed(**self.config.tuner.fixed) if self.config.tuner.mode == "subset" else base
        model = self.model()
        index = self.index()
        by_id = self.train_reports_by_id()
        k = grid.objective_k

        # Precompute what does not vary across grid points.
        cached = []
        for report in validation:
            nps = model.predict_nps(report.text)
            sims = index.query(index.provider.embed_batch([report.text])[0], 0.0)
            truth = self.label_of(report)
            cached.append((report, nps, dict(sims), truth))

        def objective(point: GridPoint) -> float:
            hits = 0
            for report, nps, sims, truth in cached:
                similar = [
                    (self._events_before(by_id[i], report.created_at), s)
                    for i, s in sims.items()
                    if s >= point.tau and i in by_id and by_id[i].id != report.id
                ]
                table = InteractionPointTable(
                    assignment=point.ip_assignment,
                    commit_or_pr=point.ip_commit,
                    discussion=point.ip_discussion,
                )
                raw = interaction_scores(
                    report, similar, table, point.decay_rate, model.label_space, report.created_at
                )
                ranked = wra(nps, normalize_scores(raw), point.weight).ranked
                if truth in ranked[:k]:
                    hits += 1
            return hits / len(cached)

        result = grid_search(grid, objective)
        result.save_json(self.path("best_params.json"))
        result.save_csv(self.path("tuning_table.csv"))
        logger.info("tuned hyperparameters", extra={"payload": result.best_params_dict()})
        return result

    # -- evaluation ---------------------------------------------------------------

    def evaluate(self, write_hits_csv: bool = False) -> dict:
        from .evaluate import TOP_K_LEVELS, build_report

        test_reports = self.load_split("test")
        if self.config.label_mode == "component":
            test_reports = [r for r in test_reports if r.components]
        params = self.runtime_params()
        rankings: dict[str, list[list[str]]] = {"hybrid": [], "content": [], "interaction": []}
        truth: list[str] = []
        for report in test_reports:
            scored = self.score_report(report, params, now=report.created_at)
            rankings["hybrid"].append(scored["ranking"])
            rankings["content"].append(scored["cbr_ranking"])
            rankings["interaction"].append(scored["ibr_ranking"])
            truth.append(self.label_of(report))
        report_obj = build_report(rankings, truth, primary_method="hybrid", baseline_method="content")
        payload = report_obj.to_dict()
        payload["params_used"] = params
        payload["label_mode"] = self.config.label_mode
        payload["seed"] = self.config.seed
        text = json.dumps(payload, sort_keys=True, indent=2) + "\n"
        self.path("eval_report.json").write_text(text)
        if write_hits_csv:
            lines = ["method,k,sample,hit"]
            for method in sorted(report_obj.hits):
                for k in TOP_K_LEVELS:
                    for i, hit in enumerate(report_obj.hits[method][k]):
                        lines.append(f"{method},{k},{i},{hit}")
            self.path("hits.csv").write_text("\n".join(lines) + "\n")
        return payload

    # -- serving --------------------------------------------------------------------

    def recommend(self, title: str, description: str, k: int) -> dict:
        """Rank candidates for a new issue; uses wall-clock time for recency."""
        if k < 1:
            raise InputError(f"k must be >= 1, got {k}")
        text = corpus_mod.normalize_text(f"{title} {description}")
        if not text:
            raise InputError("issue text is empty after normalization")
        now = datetime.now(tz=timezone.utc)
        report = BugReport(
            id="new", title=title, description=description, created_at=now, text=text
        )
        scored = self.score_report(report, self.runtime_params(), now=now)
        top = scored["ranking"][: min(k, len(scored["ranking"]))]
        return {
            "mode": self.config.label_mode,
            "candidates": [
                {
                    "id": label,
                    "fs": scored["fs"][label],
                    "nps": scored["nps"][label],
                    "nis": scored["nis"][label],
                }
                for label in top
            ],
        }
