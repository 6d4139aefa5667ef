"""Engine configuration: one JSON file drives the whole pipeline."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

from .cbr import HeadConfig, TrainSettings
from .encoders import EncoderSpec
from .errors import ConfigError

LABEL_MODES = ("developer", "component")
AGGREGATION_METHODS = ("wra", "borda")
PROVIDER_KINDS = ("hashed_bow", "remote")


@dataclass(frozen=True)
class IBRParams:
    tau: float = 0.4
    decay_rate: float = 0.01
    ip_assignment: float = 0.5
    ip_commit: float = 1.5
    ip_discussion: float = 0.2

    def validate(self, ablation: bool = False) -> None:
        if not 0.0 <= self.tau <= 1.0:
            raise ConfigError(f"tau={self.tau} outside [0, 1]")
        for name in ("ip_assignment", "ip_commit", "ip_discussion"):
            value = getattr(self, name)
            if not 0.0 <= value <= 2.0:
                raise ConfigError(f"{name}={value} outside search range [0, 2]")
        if not ablation and not 0.001 <= self.decay_rate <= 0.01:
            raise ConfigError(
                f"decay_rate={self.decay_rate} outside search range [0.001, 0.01] "
                "(enable ablation mode to explore other values)"
            )


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "hashed_bow"
    dim: int = 256
    url: str | None = None

    def validate(self) -> None:
        if self.kind not in PROVIDER_KINDS:
            raise ConfigError(f"unknown provider kind {self.kind!r}")
        if self.kind == "remote" and not self.url:
            raise ConfigError("remote provider requires a url")


@dataclass(frozen=True)
class CorpusConfig:
    activity_threshold: int = 20
    train_fraction: float = 0.9
    min_words: int = 15

    def validate(self) -> None:
        if not 0.0 < self.train_fraction < 1.0:
            raise ConfigError(f"train_fraction={self.train_fraction} outside (0, 1)")
        if self.activity_threshold < 1:
            raise ConfigError(f"activity_threshold must be >= 1, got {self.activity_threshold}")


@dataclass(frozen=True)
class TunerConfig:
    objective_k: int = 1
    validation_fraction: float = 0.05
    # Full product sweep by default; "subset" pins the axes in `fixed` and
    # sweeps the rest (an opt-in pruning for runtime).
    mode: str = "full"
    fixed: dict = field(default_factory=dict)
    # The validation tail is held out of content-ranker fitting so tuning
    # measures generalization, not memorization.
    holdout_validation: bool = True

    def validate(self) -> None:
        if not 0.0 < self.validation_fraction < 0.1:
            raise ConfigError(
                f"validation_fraction={self.validation_fraction} must be in (0, 0.1)"
            )
        if self.mode not in ("full", "subset"):
            raise ConfigError(f"unknown tuner mode {self.mode!r}")


@dataclass(frozen=True)
class EngineConfig:
    raw_path: str
    workdir: str
    seed: int = 0
    label_mode: str = "developer"
    corpus: CorpusConfig = field(default_factory=CorpusConfig)
    encoders: tuple[EncoderSpec, ...] = ()
    training: TrainSettings = field(default_factory=TrainSettings)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    ibr: IBRParams = field(default_factory=IBRParams)
    aggregation_method: str = "wra"
    aggregation_weight: float = 0.65
    tuner: TunerConfig = field(default_factory=TunerConfig)
    serve_port: int = 8123
    ablation: bool = False

    def validate(self, require_raw: bool = True) -> None:
        if self.label_mode not in LABEL_MODES:
            raise ConfigError(f"unknown label mode {self.label_mode!r}")
        if self.aggregation_method not in AGGREGATION_METHODS:
            raise ConfigError(f"unknown aggregation method {self.aggregation_method!r}")
        if not 0.0 < self.aggregation_weight < 1.0:
            raise ConfigError(
                f"aggregation_weight={self.aggregation_weight} outside (0, 1)"
            )
        if not self.encoders:
            raise ConfigError("at least one encoder spec required")
        self.corpus.validate()
        self.ibr.validate(self.ablation)
        self.provider.validate()
        self.tuner.validate()
        if require_raw and not Path(self.raw_path).exists():
            raise ConfigError(f"raw dataset not found: {self.raw_path}")


def _encoder_spec_from_dict(data: dict) -> EncoderSpec:
    allowed = {"id", "kind", "dim", "num_layers", "seq_len", "vocab_size", "seed", "token_filter"}
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown encoder spec fields: {sorted(unknown)}")
    return EncoderSpec(**data)


def config_from_dict(data: dict, base_dir: Path | None = None) -> EngineConfig:
    base = base_dir or Path(".")

    def resolve(p: str) -> str:
        path = Path(p)
        return str(path if path.is_absolute() else base / path)

    try:
        training_data = dict(data.get("training", {}))
        head_data = training_data.pop("head", {})
        if "filter_widths" in head_data:
            head_data["filter_widths"] = tuple(head_data["filter_widths"])
        training = TrainSettings(**training_data, head=HeadConfig(**head_data))
        return EngineConfig(
            raw_path=resolve(data["raw_path"]),
            workdir=resolve(data["workdir"]),
            seed=data.get("seed", 0),
            label_mode=data.get("label_mode", "developer"),
            corpus=CorpusConfig(**data.get("corpus", {})),
            encoders=tuple(_encoder_spec_from_dict(e) for e in data.get("encoders", [])),
            training=training,
            provider=ProviderConfig(**data.get("provider", {})),
            ibr=IBRParams(**data.get("ibr", {})),
            aggregation_method=data.get("aggregation", {}).get("method", "wra"),
            aggregation_weight=data.get("aggregation", {}).get("weight", 0.65),
            tuner=TunerConfig(**data.get("tuner", {})),
            serve_port=data.get("serve_port", 8123),
            ablation=data.get("ablation", False),
        )
    except KeyError as exc:
        raise ConfigError(f"config missing required field {exc}") from exc
    except TypeError as exc:
        raise ConfigError(f"unrecognized config field: {exc}") from exc


def load_config(path: str | Path) -> EngineConfig:
    path = Path(path)
    try:
        data = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot load config {path}: {exc}") from exc
    return config_from_dict(data, base_dir=path.parent)
