"""Content-based ranker.

Fuses per-token representations from several encoders with learnable
per-(encoder, layer) weights, runs one CNN classifier head per fused layer,
and soft-votes the head logits with learnable head weights. Prediction
scores are min-max normalized softmax probabilities over the label space.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

import numpy as np

from .corpus import BugReport, SampleWeights
from .encoders import Encoder, EncoderSpec, LayeredEmbedding, build_encoder
from .errors import (
    ConfigError,
    NumericError,
    ShapeError,
    TrainingError,
    UnknownLabelError,
)
from .nn import (
    AdamW,
    BatchNorm,
    Conv1d,
    Linear,
    Param,
    dropout,
    dropout_backward,
    global_max_pool,
    global_max_pool_backward,
    linear_warmup_schedule,
    relu,
    relu_backward,
    softmax,
    softmax_cross_entropy,
)

FILTER_WIDTHS = (3, 4, 5, 6)


@dataclass(frozen=True)
class HeadConfig:
    n_filters: int = 256
    dropout: float = 0.3
    bn_momentum: float = 0.1
    filter_widths: tuple[int, ...] = FILTER_WIDTHS


@dataclass(frozen=True)
class TrainSettings:
    """Knobs for the training loop."""

    epochs: int = 40
    batch_size: int = 8
    peak_lr: float = 1e-5
    lr_scale: float = 1.0
    weight_decay: float = 1e-3
    warmup_frac: float = 0.1
    seed: int = 0
    n_classifiers: int = 3
    head: HeadConfig = field(default_factory=HeadConfig)

    @property
    def effective_peak_lr(self) -> float:
        return self.peak_lr * self.lr_scale

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True)
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


class ClassifierHead:
    """Parallel convolutions over tokens, one bank per filter width.

    Per width: conv -> batch norm -> ReLU -> global max pool. The pooled
    vectors are concatenated, passed through dropout (training only), and
    mapped to logits over the label space.
    """

    def __init__(
        self,
        head_id: str,
        in_dim: int,
        n_labels: int,
        cfg: HeadConfig,
        rng: np.random.Generator,
    ):
        self.head_id = head_id
        self.cfg = cfg
        self.convs = {
            w: Conv1d(w, in_dim, cfg.n_filters, rng, use_bias=False) for w in cfg.filter_widths
        }
        self.bns = {w: BatchNorm(cfg.n_filters, momentum=cfg.bn_momentum) for w in cfg.filter_widths}
        self.out = Linear(cfg.n_filters * len(cfg.filter_widths), n_labels, rng)

    def forward(
        self,
        fused: np.ndarray,
        train: bool,
        rng: np.random.Generator | None,
        cache: dict | None = None,
    ) -> np.ndarray:
        cache = cache if cache is not None else {}
        pooled = []
        for w in self.cfg.filter_widths:
            c: dict = {}
            z = self.convs[w].forward(fused, c)
            z = self.bns[w].forward(z, train, c)
            z = relu(z, c)
            z = global_max_pool(z, c)
            pooled.append(z)
            cache[f"w{w}"] = c
        feats = np.concatenate(pooled, axis=1)
        dcache: dict = {}
        feats = dropout(feats, self.cfg.dropout, train, rng or np.random.default_rng(0), dcache)
        cache["drop"] = dcache
        lcache: dict = {}
        logits = self.out.forward(feats, lcache)
        cache["lin"] = lcache
        if not np.all(np.isfinite(logits)):
            raise NumericError(f"non-finite activations in head {self.head_id!r}")
        return logits

    def backward(self, dlogits: np.ndarray, cache: dict) -> np.ndarray:
        dfeats = self.out.backward(dlogits, cache["lin"])
        dfeats = dropout_backward(dfeats, cache["drop"])
        n_f = self.cfg.n_filters
        dfused = None
        for i, w in enumerate(self.cfg.filter_widths):
            c = cache[f"w{w}"]
            d = dfeats[:, i * n_f : (i + 1) * n_f]
            d = global_max_pool_backward(d, c)
            d = relu_backward(d, c)
            d = self.bns[w].backward(d, c)
            d = self.convs[w].backward(d, c)
            dfused = d if dfused is None else dfused + d
        return dfused

    def params(self, prefix: str) -> dict[str, Param]:
        out: dict[str, Param] = {}
        for w in self.cfg.filter_widths:
            out[f"{prefix}.conv{w}.w"] = self.convs[w].w
            out[f"{prefix}.bn{w}.gamma"] = self.bns[w].gamma
            out[f"{prefix}.bn{w}.beta"] = self.bns[w].beta
        out[f"{prefix}.out.w"] = self.out.w
        out[f"{prefix}.out.b"] = self.out.b
        return out


def fuse_layers(
    embeddings: Sequence[LayeredEmbedding], hidden_weights: np.ndarray
) -> list[np.ndarray]:
    """Weight each encoder's layer matrices and concatenate along features.

    ``hidden_weights[i, j]`` scales encoder i's layer at offset j. Returns
    one fused matrix per layer offset with feature dim = sum of encoder dims.
    """
    n_layers = {len(e.layers) for e in embeddings}
    seq_lens = {e.layers[0].shape[0] for e in embeddings}
    if len(n_layers) != 1 or len(seq_lens) != 1:
        raise ShapeError(
            f"embeddings disagree on layer count {sorted(n_layers)} or "
            f"sequence length {sorted(seq_lens)}"
        )
    k = n_layers.pop()
    if hidden_weights.shape != (len(embeddings), k):
        raise ShapeError(
            f"hidden weight shape {hidden_weights.shape} does not match "
            f"{(len(embeddings), k)}"
        )
    return [
        np.concatenate(
            [hidden_weights[i, j] * emb.layers[j] for i, emb in enumerate(embeddings)],
            axis=-1,
        )
        for j in range(k)
    ]


class CBRModel:
    """Ensemble of layered encoders with per-layer classifier heads."""

    def __init__(
        self,
        encoders: Sequence[Encoder],
        label_space: Sequence[str],
        n_classifiers: int = 3,
        head_cfg: HeadConfig | None = None,
        seed: int = 0,
    ):
        if not encoders:
            raise ConfigError("at least one encoder required")
        if not label_space:
            raise ConfigError("empty label space")
        for enc in encoders:
            if n_classifiers > enc.num_layers:
                raise ConfigError(
                    f"{n_classifiers} classifiers need {n_classifiers} layers but "
                    f"encoder {enc.spec.id!r} has {enc.num_layers}"
                )
        seq_lens = {enc.spec.seq_len for enc in encoders}
        if len(seq_lens) != 1:
            raise ConfigError(f"encoders disagree on sequence length: {sorted(seq_lens)}")
        self.encoders = list(encoders)
        self.label_space = tuple(label_space)
        self.k = n_classifiers
        self.head_cfg = head_cfg or HeadConfig()
        self.seed = seed
        self.hw = Param(np.ones((len(encoders), self.k)))
        self.cw = Param(np.full(self.k, 1.0 / self.k))
        in_dim = sum(enc.dim for enc in encoders)
        rng = np.random.default_rng([seed, 7])
        self.heads = [
            ClassifierHead(f"head-{j}", in_dim, len(self.label_space), self.head_cfg, rng)
            for j in range(self.k)
        ]
        for enc in self.encoders:
            enc.set_num_trainable(min(self.k, enc.num_layers))
        self._dim_slices = []
        start = 0
        for enc in encoders:
            self._dim_slices.append(slice(start, start + enc.dim))
            start += enc.dim

    # -- forward/backward ---------------------------------------------------

    def label_index(self, label: str) -> int:
        try:
            return self.label_space.index(label)
        except ValueError:
            raise UnknownLabelError(f"label {label!r} not in trained label space") from None

    def prepare(self, texts: Sequence[str]) -> list:
        return [enc.prepare(texts) for enc in self.encoders]

    def subset(self, prepared: list, idx: np.ndarray) -> list:
        return [enc.subset(p, idx) for enc, p in zip(self.encoders, prepared)]

    def forward(
        self,
        prepared: list,
        train: bool = False,
        rng: np.random.Generator | None = None,
        cache: dict | None = None,
    ) -> np.ndarray:
        caches_enc: list[dict] = [{} for _ in self.encoders]
        layer_lists = [
            enc.forward(p, self.k, c)
            for enc, p, c in zip(self.encoders, prepared, caches_enc)
        ]
        logits = self.forward_from_layers(layer_lists, train, rng, cache)
        if cache is not None:
            cache["enc_caches"] = caches_enc
        return logits

    def forward_from_layers(
        self,
        layer_lists: list[list[np.ndarray]],
        train: bool = False,
        rng: np.random.Generator | None = None,
        cache: dict | None = None,
    ) -> np.ndarray:
        """Forward pass from precomputed encoder layer matrices."""
        fused = [
            np.concatenate(
                [self.hw.value[i, j] * layers[j] for i, layers in enumerate(layer_lists)],
                axis=-1,
            )
            for j in range(self.k)
        ]
        head_caches: list[dict] = [{} for _ in self.heads]
        head_logits = [
            head.forward(fused[j], train, rng, head_caches[j])
            for j, head in enumerate(self.heads)
        ]
        logits = sum(self.cw.value[j] * head_logits[j] for j in range(self.k))
        if cache is not None:
            cache.update(
                layer_lists=layer_lists,
                head_logits=head_logits,
                head_caches=head_caches,
                enc_caches=[],
            )
        return logits

    def backward(self, dlogits: np.ndarray, cache: dict) -> None:
        layer_lists = cache["layer_lists"]
        head_logits = cache["head_logits"]
        enc_douts: list[list[np.ndarray]] = [
            [np.zeros_like(layers[j]) for j in range(self.k)] for layers in layer_lists
        ]
        for j, head in enumerate(self.heads):
            self.cw.grad[j] += float(np.sum(dlogits * head_logits[j]))
            dfused = head.backward(self.cw.value[j] * dlogits, cache["head_caches"][j])
            for i, layers in enumerate(layer_lists):
                dslice = dfused[:, :, self._dim_slices[i]]
                self.hw.grad[i, j] += float(np.sum(dslice * layers[j]))
                enc_douts[i][j] = self.hw.value[i, j] * dslice
        for enc, douts, ecache in zip(self.encoders, enc_douts, cache["enc_caches"]):
            enc.backward(douts, ecache)

    def params(self) -> dict[str, Param]:
        out: dict[str, Param] = {"hw": self.hw, "cw": self.cw}
        for j, head in enumerate(self.heads):
            out.update(head.params(f"heads.{j}"))
        for enc in self.encoders:
            out.update(enc.params())
        return out

    # -- inference ----------------------------------------------------------

    def predict_logits(self, texts: Sequence[str]) -> np.ndarray:
        return self.forward(self.prepare(texts), train=False)

    def predict_nps(self, text: str) -> dict[str, float]:
        """Normalized prediction scores over the label space for one report."""
        logits = self.predict_logits([text])[0]
        nps = minmax_normalize(softmax(logits))
        return {label: float(nps[i]) for i, label in enumerate(self.label_space)}

    def ranked_labels(self, nps: dict[str, float]) -> list[str]:
        return [label for label, _ in sorted(nps.items(), key=lambda kv: (-kv[1], kv[0]))]


def minmax_normalize(scores: np.ndarray) -> np.ndarray:
    """Scale scores into [0, 1]; a constant vector maps to all 0.5."""
    lo, hi = float(scores.min()), float(scores.max())
    if hi == lo:
        return np.full_like(scores, 0.5)
    return (scores - lo) / (hi - lo)


def cbr_predict(report: BugReport, model: CBRModel) -> dict[str, float]:
    """Normalized prediction scores for one bug report."""
    return model.predict_nps(report.text)


@dataclass
class TrainHistory:
    losses: list[float] = field(default_factory=list)
    learning_rates: list[float] = field(default_factory=list)


def cbr_train(
    train: Sequence[BugReport],
    weights: SampleWeights | np.ndarray,
    encoder_specs: Sequence[EncoderSpec],
    settings: TrainSettings,
    label_space: Sequence[str] | None = None,
    label_of=None,
) -> tuple[CBRModel, TrainHistory]:
    """Train the content ranker on a training split.

    Batches are drawn with replacement using the per-issue sampling
    probabilities. Optimization is Adam with decoupled weight decay under a
    linear warmup/decay schedule. Frozen encoder layers never move.
    Deterministic for a fixed seed.
    """
    if not train:
        raise TrainingError("empty training split")
    label_of = label_of or (lambda r: r.owner)
    probs = weights.probabilities if isinstance(weights, SampleWeights) else np.asarray(weights)
    if probs.shape[0] != len(train):
        raise ShapeError(f"{probs.shape[0]} weights for {len(train)} reports")
    labels = tuple(label_space or sorted({label_of(r) for r in train}))
    label_to_idx = {lab: i for i, lab in enumerate(labels)}
    try:
        y = np.array([label_to_idx[label_of(r)] for r in train], dtype=np.int64)
    except KeyError as exc:
        raise UnknownLabelError(f"training label {exc} missing from label space") from exc

    encoders = [build_encoder(spec) for spec in encoder_specs]
    model = CBRModel(
        encoders,
        labels,
        n_classifiers=settings.n_classifiers,
        head_cfg=settings.head,
        seed=settings.seed,
    )
    prepared = model.prepare([r.text for r in train])
    registry = model.params()
    opt = AdamW(registry, weight_decay=settings.weight_decay)
    sample_rng = np.random.default_rng([settings.seed, 101])
    drop_rng = np.random.default_rng([settings.seed, 202])

    n = len(train)
    steps_per_epoch = max(1, math.ceil(n / settings.batch_size))
    total_steps = settings.epochs * steps_per_epoch
    history = TrainHistory()
    step = 0
    for epoch in range(settings.epochs):
        for _ in range(steps_per_epoch):
            idx = sample_rng.choice(n, size=settings.batch_size, replace=True, p=probs)
            batch = model.subset(prepared, idx)
            cache: dict = {}
            logits = model.forward(batch, train=True, rng=drop_rng, cache=cache)
            try:
                loss, dlogits = softmax_cross_entropy(logits, y[idx])
            except NumericError as exc:
                raise TrainingError(
                    f"training diverged at epoch {epoch} step {step}: {exc}",
                    epoch=epoch,
                    step=step,
                ) from exc
            if not math.isfinite(loss):
                raise TrainingError(
                    f"non-finite loss at epoch {epoch} step {step}",
                    epoch=epoch,
                    step=step,
                )
            opt.zero_grad()
            model.backward(dlogits, cache)
            lr = linear_warmup_schedule(
                step, total_steps, settings.effective_peak_lr, settings.warmup_frac
            )
            opt.step(lr)
            history.losses.append(loss)
            history.learning_rates.append(lr)
            step += 1
    return model, history


# ---------------------------------------------------------------------------
# Checkpointing

CHECKPOINT_VERSION = 1


def save_checkpoint(model: CBRModel, path, settings: TrainSettings | None = None) -> None:
    """Persist all parameters, running stats, label space, and encoder specs."""
    meta = {
        "format_version": CHECKPOINT_VERSION,
        "label_space": list(model.label_space),
        "n_classifiers": model.k,
        "seed": model.seed,
        "head": asdict(model.head_cfg),
        "encoder_specs": [enc.spec.to_dict() for enc in model.encoders],
        "config_hash": settings.config_hash() if settings else None,
    }
    arrays: dict[str, np.ndarray] = {name: p.value for name, p in model.params().items()}
    for j, head in enumerate(model.heads):
        for w in head.cfg.filter_widths:
            arrays[f"heads.{j}.bn{w}.running_mean"] = head.bns[w].running_mean
            arrays[f"heads.{j}.bn{w}.running_var"] = head.bns[w].running_var
    buf = io.BytesIO()
    np.savez(buf, meta=np.frombuffer(json.dumps(meta, sort_keys=True).encode(), dtype=np.uint8), **arrays)
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path) -> CBRModel:
    with np.load(path) as data:
        meta = json.loads(bytes(data["meta"]).decode("utf-8"))
        if meta["format_version"] != CHECKPOINT_VERSION:
            raise ConfigError(f"unsupported checkpoint version {meta['format_version']}")
        head_meta = dict(meta["head"])
        head_meta["filter_widths"] = tuple(head_meta["filter_widths"])
        specs = [EncoderSpec(**{**s, "token_filter": s.get("token_filter")}) for s in meta["encoder_specs"]]
        model = CBRModel(
            [build_encoder(s) for s in specs],
            meta["label_space"],
            n_classifiers=meta["n_classifiers"],
            head_cfg=HeadConfig(**head_meta),
            seed=meta["seed"],
        )
        for name, p in model.params().items():
            p.value[...] = data[name]
        for j, head in enumerate(model.heads):
            for w in head.cfg.filter_widths:
                head.bns[w].running_mean[...] = data[f"heads.{j}.bn{w}.running_mean"]
                head.bns[w].running_var[...] = data[f"heads.{j}.bn{w}.running_var"]
    return model
