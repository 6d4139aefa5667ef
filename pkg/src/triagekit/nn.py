"""Minimal numpy neural-net primitives with hand-written backprop.

Everything runs in float64. Layers cache what their backward pass needs in
an explicit dict so forward calls stay reentrant.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError


class Param:
    """A trainable array with its gradient accumulator."""

    __slots__ = ("value", "grad", "decay", "trainable")

    def __init__(self, value: np.ndarray, decay: bool = True, trainable: bool = True):
        self.value = np.asarray(value, dtype=np.float64)
        self.grad = np.zeros_like(self.value)
        self.decay = decay
        self.trainable = trainable

    def zero_grad(self) -> None:
        self.grad[...] = 0.0


class Conv1d:
    """Same-padded 1-D convolution along the token axis.

    Input (B, S, D) -> output (B, S, F). Zero padding keeps every filter
    width defined even for sequences shorter than the filter.
    """

    def __init__(
        self,
        width: int,
        in_dim: int,
        n_filters: int,
        rng: np.random.Generator,
        use_bias: bool = True,
    ):
        scale = 1.0 / np.sqrt(width * in_dim)
        self.width = width
        self.w = Param(rng.normal(0.0, scale, size=(width, in_dim, n_filters)))
        # A bias is redundant (and its gradient identically zero) when batch
        # norm follows, so heads disable it.
        self.b = Param(np.zeros(n_filters), decay=False) if use_bias else None

    def forward(self, x: np.ndarray, cache: dict) -> np.ndarray:
        left = (self.width - 1) // 2
        right = self.width // 2
        xpad = np.pad(x, ((0, 0), (left, right), (0, 0)))
        seq = x.shape[1]
        n_filters = self.w.value.shape[2]
        out = np.zeros((x.shape[0], seq, n_filters))
        if self.b is not None:
            out += self.b.value
        for u in range(self.width):
            out += xpad[:, u : u + seq, :] @ self.w.value[u]
        cache["xpad"] = xpad
        cache["left"] = left
        return out

    def backward(self, dout: np.ndarray, cache: dict) -> np.ndarray:
        xpad, left = cache["xpad"], cache["left"]
        seq = dout.shape[1]
        dxpad = np.zeros_like(xpad)
        for u in range(self.width):
            self.w.grad[u] += np.einsum("bsd,bsf->df", xpad[:, u : u + seq, :], dout)
            dxpad[:, u : u + seq, :] += dout @ self.w.value[u].T
        if self.b is not None:
            self.b.grad += dout.sum(axis=(0, 1))
        return dxpad[:, left : left + seq, :]


class BatchNorm:
    """Per-channel batch normalization over batch and position axes."""

    def __init__(self, n_channels: int, momentum: float = 0.1, eps: float = 1e-5):
        self.gamma = Param(np.ones(n_channels), decay=False)
        self.beta = Param(np.zeros(n_channels), decay=False)
        self.running_mean = np.zeros(n_channels)
        self.running_var = np.ones(n_channels)
        self.momentum = momentum
        self.eps = eps

    def forward(self, x: np.ndarray, train: bool, cache: dict) -> np.ndarray:
        if train:
            mean = x.mean(axis=(0, 1))
            var = x.var(axis=(0, 1))
            self.running_mean = (1 - self.momentum) * self.running_mean + self.momentum * mean
            self.running_var = (1 - self.momentum) * self.running_var + self.momentum * var
        else:
            mean, var = self.running_mean, self.running_var
        inv_std = 1.0 / np.sqrt(var + self.eps)
        xhat = (x - mean) * inv_std
        cache["xhat"] = xhat
        cache["inv_std"] = inv_std
        cache["train"] = train
        return self.gamma.value * xhat + self.beta.value

    def backward(self, dout: np.ndarray, cache: dict) -> np.ndarray:
        xhat, inv_std = cache["xhat"], cache["inv_std"]
        self.beta.grad += dout.sum(axis=(0, 1))
        self.gamma.grad += (dout * xhat).sum(axis=(0, 1))
        dxhat = dout * self.gamma.value
        if not cache["train"]:
            return dxhat * inv_std
        n = xhat.shape[0] * xhat.shape[1]
        return (
            inv_std
            / n
            * (n * dxhat - dxhat.sum(axis=(0, 1)) - xhat * (dxhat * xhat).sum(axis=(0, 1)))
        )


def relu(x: np.ndarray, cache: dict) -> np.ndarray:
    mask = x > 0
    cache["mask"] = mask
    return x * mask


def relu_backward(dout: np.ndarray, cache: dict) -> np.ndarray:
    return dout * cache["mask"]


def global_max_pool(x: np.ndarray, cache: dict) -> np.ndarray:
    """Max over the position axis: (B, S, F) -> (B, F). Ties go to the
    earliest position."""
    idx = np.argmax(x, axis=1)
    cache["idx"] = idx
    cache["shape"] = x.shape
    return np.take_along_axis(x, idx[:, None, :], axis=1)[:, 0, :]


def global_max_pool_backward(dout: np.ndarray, cache: dict) -> np.ndarray:
    dx = np.zeros(cache["shape"])
    np.put_along_axis(dx, cache["idx"][:, None, :], dout[:, None, :], axis=1)
    return dx


def dropout(
    x: np.ndarray, p: float, train: bool, rng: np.random.Generator, cache: dict
) -> np.ndarray:
    if not train or p <= 0.0:
        cache["scale"] = None
        return x
    mask = rng.random(x.shape) >= p
    scale = mask / (1.0 - p)
    cache["scale"] = scale
    return x * scale


def dropout_backward(dout: np.ndarray, cache: dict) -> np.ndarray:
    scale = cache["scale"]
    return dout if scale is None else dout * scale


class Linear:
    def __init__(self, in_dim: int, out_dim: int, rng: np.random.Generator):
        scale = 1.0 / np.sqrt(in_dim)
        self.w = Param(rng.normal(0.0, scale, size=(in_dim, out_dim)))
        self.b = Param(np.zeros(out_dim), decay=False)

    def forward(self, x: np.ndarray, cache: dict) -> np.ndarray:
        cache["x"] = x
        return x @ self.w.value + self.b.value

    def backward(self, dout: np.ndarray, cache: dict) -> np.ndarray:
        x = cache["x"]
        self.w.grad += x.T @ dout
        self.b.grad += dout.sum(axis=0)
        return dout @ self.w.value.T


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def softmax_cross_entropy(
    logits: np.ndarray, targets: np.ndarray
) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over the batch and its gradient w.r.t. logits."""
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite logits in cross-entropy")
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    loss = -log_probs[np.arange(n), targets].mean()
    dlogits = np.exp(log_probs)
    dlogits[np.arange(n), targets] -= 1.0
    return float(loss), dlogits / n


class AdamW:
    """Adam with decoupled weight decay applied to decay-flagged params."""

    def __init__(
        self,
        params: dict[str, Param],
        weight_decay: float = 1e-3,
        beta1: float = 0.9,
        beta2: float = 0.999,
        eps: float = 1e-8,
    ):
        self.params = params
        self.weight_decay = weight_decay
        self.beta1, self.beta2, self.eps = beta1, beta2, eps
        self.m = {k: np.zeros_like(p.value) for k, p in params.items()}
        self.v = {k: np.zeros_like(p.value) for k, p in params.items()}
        self.t = 0

    def step(self, lr: float) -> None:
        self.t += 1
        bc1 = 1.0 - self.beta1**self.t
        bc2 = 1.0 - self.beta2**self.t
        for name, p in self.params.items():
            if not p.trainable:
                continue
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1 - self.beta1) * p.grad
            v *= self.beta2
            v += (1 - self.beta2) * p.grad**2
            update = (m / bc1) / (np.sqrt(v / bc2) + self.eps)
            if p.decay:
                update = update + self.weight_decay * p.value
            p.value -= lr * update

    def zero_grad(self) -> None:
        for p in self.params.values():
            p.zero_grad()


def linear_warmup_schedule(step: int, total_steps: int, peak_lr: float, warmup_frac: float) -> float:
    """Linear ramp to ``peak_lr`` over the warmup portion, then linear decay
    to zero at ``total_steps``."""
    warmup = max(1, int(round(warmup_frac * total_steps)))
    if step < warmup:
        return peak_lr * (step + 1) / warmup
    if total_steps <= warmup:
        return peak_lr
    return peak_lr * max(0.0, (total_steps - step)) / (total_steps - warmup)
