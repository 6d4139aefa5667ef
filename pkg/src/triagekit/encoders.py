"""Layered text encoders.

Every encoder tokenizes with its own tokenizer and exposes per-token
representations for each of its last ``k`` layers. Two reference families:

* ``HashedNgramEncoder`` - feature-hashed unigram/bigram/... contexts, one
  layer per n-gram order, no trainable parameters.
* ``TrainableTextEncoder`` - embedding table plus stacked position-mixing
  affine layers with a tanh nonlinearity; supports freezing all but the
  last ``k`` layers, so fine-tuning touches only the top of the stack.

Layer lists are ordered by *offset from the top*: index 0 is the final
layer, index 1 the one below it, and so on.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from functools import lru_cache
from hashlib import blake2b
from typing import Sequence

import numpy as np

from .errors import ConfigError, ShapeError
from .nn import Param

PAD_ID = 0

_TOKEN_RE = re.compile(r"[a-z0-9]+")


def stable_hash(text: str, salt: str = "") -> int:
    """Process-independent 64-bit hash (unlike builtin ``hash``)."""
    digest = blake2b(f"{salt}\x1f{text}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


@dataclass(frozen=True)
class EncoderSpec:
    """Configuration of one encoder instance."""

    id: str
    kind: str
    dim: int = 64
    num_layers: int = 3
    seq_len: int = 256
    vocab_size: int = 4096
    seed: int = 0
    token_filter: str | None = None

    def __post_init__(self) -> None:
        if self.kind not in ("hashed_ngram", "trainable"):
            raise ConfigError(f"unknown encoder kind {self.kind!r}")
        if self.dim <= 0 or self.num_layers < 1 or self.seq_len < 1:
            raise ConfigError(f"invalid encoder geometry in spec {self.id!r}")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "dim": self.dim,
            "num_layers": self.num_layers,
            "seq_len": self.seq_len,
            "vocab_size": self.vocab_size,
            "seed": self.seed,
            "token_filter": self.token_filter,
        }


@dataclass(frozen=True)
class LayeredEmbedding:
    """Per-token matrices for the last k layers of one encoder.

    ``layers[0]`` is the final layer; all matrices share shape
    ``(seq_len, dim)``.
    """

    layers: tuple[np.ndarray, ...]
    encoder_id: str
    dim: int

    def __post_init__(self) -> None:
        shapes = {m.shape for m in self.layers}
        if len(shapes) != 1:
            raise ShapeError(f"layer shapes differ: {sorted(shapes)}")
        if any(not np.all(np.isfinite(m)) for m in self.layers):
            raise ShapeError(f"non-finite entries in embedding from {self.encoder_id!r}")


def kpft_layer_status(num_layers: int, k: int) -> tuple[bool, ...]:
    """Trainability flags for layers 1..L: the last ``k`` layers are
    trainable, everything below stays frozen."""
    if not 1 <= k <= num_layers:
        raise ConfigError(f"k={k} outside [1, {num_layers}]")
    return tuple(layer >= num_layers - k + 1 for layer in range(1, num_layers + 1))


class HashTokenizer:
    """Lowercase word/number splitting into a fixed hash vocabulary.

    Token id 0 is reserved for padding. An optional ``token_filter`` regex
    restricts which surface tokens the encoder sees at all, which lets two
    encoder instances attend to disjoint vocabulary slices.
    """

    def __init__(
        self,
        vocab_size: int,
        seq_len: int,
        salt: str = "",
        token_filter: str | None = None,
    ):
        self.vocab_size = vocab_size
        self.seq_len = seq_len
        self.salt = salt
        self._filter = re.compile(token_filter) if token_filter else None

    def tokens(self, text: str) -> list[str]:
        toks = _TOKEN_RE.findall(text.lower())
        if self._filter is not None:
            toks = [t for t in toks if self._filter.search(t)]
        return toks[: self.seq_len]

    def bucket(self, token: str) -> int:
        return stable_hash(token, self.salt) % (self.vocab_size - 1) + 1

    def encode(self, text: str) -> np.ndarray:
        ids = np.full(self.seq_len, PAD_ID, dtype=np.int64)
        toks = self.tokens(text)
        if toks:
            ids[: len(toks)] = [self.bucket(t) for t in toks]
        return ids


class Encoder:
    """Common interface: prepare once, encode per batch, backprop if trainable."""

    spec: EncoderSpec
    tokenizer: HashTokenizer

    @property
    def num_layers(self) -> int:
        return self.spec.num_layers

    @property
    def dim(self) -> int:
        return self.spec.dim

    def prepare(self, texts: Sequence[str]):
        raise NotImplementedError

    def subset(self, prepared, idx: np.ndarray):
        raise NotImplementedError

    def forward(self, prepared, k: int, cache: dict | None = None) -> list[np.ndarray]:
        raise NotImplementedError

    def backward(self, douts: Sequence[np.ndarray], cache: dict) -> None:
        """Accumulate parameter gradients; no-op for frozen encoders."""

    def params(self) -> dict[str, Param]:
        return {}

    def set_num_trainable(self, k: int) -> None:
        """Freeze all but the last ``k`` layers."""
        kpft_layer_status(self.num_layers, k)  # validates k

    def _check_k(self, k: int) -> None:
        if not 1 <= k <= self.num_layers:
            raise ConfigError(
                f"requested last {k} layers from encoder {self.spec.id!r} "
                f"with only {self.num_layers} layers"
            )

    def encode(self, text: str, k: int) -> LayeredEmbedding:
        layers = self.forward(self.prepare([text]), k)
        return LayeredEmbedding(
            layers=tuple(m[0] for m in layers), encoder_id=self.spec.id, dim=self.dim
        )


class HashedNgramEncoder(Encoder):
    """Frozen encoder: layer n holds signed feature-hashed n-gram contexts.

    Layer 1 hashes each token alone, layer 2 the (previous, current) pair,
    and so on; positions before the context window are padded with a
    start marker. Pad positions embed to zero rows.
    """

    BOUNDARY = "<s>"

    def __init__(self, spec: EncoderSpec):
        if spec.kind != "hashed_ngram":
            raise ConfigError(f"spec kind {spec.kind!r} is not hashed_ngram")
        self.spec = spec
        self.tokenizer = HashTokenizer(
            spec.vocab_size, spec.seq_len, salt=spec.id, token_filter=spec.token_filter
        )

    def prepare(self, texts: Sequence[str]) -> list[list[str]]:
        return [self.tokenizer.tokens(t) for t in texts]

    def subset(self, prepared: list[list[str]], idx: np.ndarray) -> list[list[str]]:
        return [prepared[i] for i in idx]

    def _layer_for_order(self, tokens_batch: list[list[str]], order: int) -> np.ndarray:
        out = np.zeros((len(tokens_batch), self.spec.seq_len, self.dim), dtype=np.float64)
        salt = f"{self.spec.id}|n={order}"
        for b, toks in enumerate(tokens_batch):
            for t, _ in enumerate(toks):
                context = toks[max(0, t - order + 1) : t + 1]
                if len(context) < order:
                    context = [self.BOUNDARY] * (order - len(context)) + context
                h = stable_hash("\x1f".join(context), salt)
                sign = 1.0 if h & (1 << 63) else -1.0
                out[b, t, h % self.dim] = sign
        return out

    def forward(self, prepared, k: int, cache: dict | None = None) -> list[np.ndarray]:
        self._check_k(k)
        # Offset j corresponds to n-gram order L - j (final layer = longest context).
        return [
            self._layer_for_order(prepared, self.num_layers - j) for j in range(k)
        ]


class TrainableTextEncoder(Encoder):
    """Embedding table plus stacked position-mixing affine layers.

    Layer l computes ``tanh(M @ h_{l-1} @ W_l + b_l)`` where ``M`` is a fixed
    banded matrix averaging each position with its neighbours. The embedding
    table sits below layer 1 and is never trainable; ``set_num_trainable``
    marks only the top ``k`` affine layers as trainable.
    """

    def __init__(self, spec: EncoderSpec):
        if spec.kind != "trainable":
            raise ConfigError(f"spec kind {spec.kind!r} is not trainable")
        self.spec = spec
        self.tokenizer = HashTokenizer(
            spec.vocab_size, spec.seq_len, salt=spec.id, token_filter=spec.token_filter
        )
        rng = np.random.default_rng([spec.seed, stable_hash(spec.id) % (2**31)])
        self.emb = Param(
            rng.normal(0.0, 0.1, size=(spec.vocab_size, spec.dim)), trainable=False
        )
        self.emb.value[PAD_ID] = 0.0
        scale = 1.0 / np.sqrt(spec.dim)
        self.weights = [
            Param(rng.normal(0.0, scale, size=(spec.dim, spec.dim)))
            for _ in range(spec.num_layers)
        ]
        self.biases = [
            Param(np.zeros(spec.dim), decay=False) for _ in range(spec.num_layers)
        ]
        self.mix = self._mixing_matrix(spec.seq_len)
        self._trainable_mask = [True] * spec.num_layers

    @staticmethod
    def _mixing_matrix(seq_len: int) -> np.ndarray:
        m = np.zeros((seq_len, seq_len), dtype=np.float64)
        idx = np.arange(seq_len)
        m[idx, idx] = 0.5
        m[idx[1:], idx[:-1]] = 0.25
        m[idx[:-1], idx[1:]] = 0.25
        return m

    def set_num_trainable(self, k: int) -> None:
        self._trainable_mask = list(kpft_layer_status(self.num_layers, k))
        for layer, flag in enumerate(self._trainable_mask):
            self.weights[layer].trainable = flag
            self.biases[layer].trainable = flag

    def params(self) -> dict[str, Param]:
        out: dict[str, Param] = {f"{self.spec.id}.emb": self.emb}
        for layer in range(self.num_layers):
            out[f"{self.spec.id}.layer{layer + 1}.w"] = self.weights[layer]
            out[f"{self.spec.id}.layer{layer + 1}.b"] = self.biases[layer]
        return out

    def prepare(self, texts: Sequence[str]) -> np.ndarray:
        return np.stack([self.tokenizer.encode(t) for t in texts])

    def subset(self, prepared: np.ndarray, idx: np.ndarray) -> np.ndarray:
        return prepared[idx]

    def forward(self, prepared: np.ndarray, k: int, cache: dict | None = None) -> list[np.ndarray]:
        self._check_k(k)
        h = self.emb.value[prepared]  # (B, S, D)
        hidden = [h]
        for layer in range(self.num_layers):
            mixed = np.einsum("st,btd->bsd", self.mix, h)
            h = np.tanh(mixed @ self.weights[layer].value + self.biases[layer].value)
            hidden.append(h)
        if cache is not None:
            cache["hidden"] = hidden
        # hidden[l] is the output of layer l; offset j maps to layer L - j.
        return [hidden[self.num_layers - j] for j in range(k)]

    def backward(self, douts: Sequence[np.ndarray], cache: dict) -> None:
        hidden = cache["hidden"]
        k = len(douts)
        lowest = self.num_layers - k + 1  # nothing trainable sits below this layer
        grad = np.zeros_like(hidden[-1])
        for layer in range(self.num_layers, lowest - 1, -1):
            offset = self.num_layers - layer
            if offset < k:
                grad = grad + douts[offset]
            dpre = grad * (1.0 - hidden[layer] ** 2)
            mixed = np.einsum("st,btd->bsd", self.mix, hidden[layer - 1])
            if self._trainable_mask[layer - 1]:
                self.weights[layer - 1].grad += np.einsum("bsd,bse->de", mixed, dpre)
                self.biases[layer - 1].grad += dpre.sum(axis=(0, 1))
            dmixed = dpre @ self.weights[layer - 1].value.T
            grad = np.einsum("ts,btd->bsd", self.mix, dmixed)


def build_encoder(spec: EncoderSpec) -> Encoder:
    if spec.kind == "hashed_ngram":
        return HashedNgramEncoder(spec)
    return TrainableTextEncoder(spec)


@lru_cache(maxsize=32)
def _cached_encoder(spec: EncoderSpec) -> Encoder:
    return build_encoder(spec)


def encode(text: str, spec: EncoderSpec | Encoder, k: int) -> LayeredEmbedding:
    """Encode one text into its last ``k`` per-token layer matrices.

    Deterministic for a fixed spec (parameters derive from the spec seed).
    """
    encoder = _cached_encoder(spec) if isinstance(spec, EncoderSpec) else spec
    return encoder.encode(text, k)
