"""Layer primitives: finite-difference gradient checks and a direct
convolution oracle for the classifier head."""

from __future__ import annotations

import numpy as np
import pytest

from triagekit.cbr import ClassifierHead, HeadConfig
from triagekit.errors import NumericError
from triagekit.nn import (
    AdamW,
    BatchNorm,
    Conv1d,
    Linear,
    Param,
    global_max_pool,
    global_max_pool_backward,
    linear_warmup_schedule,
    relu,
    relu_backward,
    softmax,
    softmax_cross_entropy,
)

H = 1e-6


def fd_grad(fn, array: np.ndarray) -> np.ndarray:
    """Central finite differences of a scalar function w.r.t. an array."""
    grad = np.zeros_like(array)
    flat, gflat = array.ravel(), grad.ravel()
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + H
        hi = fn()
        flat[i] = orig - H
        lo = fn()
        flat[i] = orig
        gflat[i] = (hi - lo) / (2 * H)
    return grad


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / max(np.linalg.norm(a), np.linalg.norm(b), 1e-12))


class TestConv1d:
    def test_gradients(self):
        rng = np.random.default_rng(0)
        conv = Conv1d(width=4, in_dim=5, n_filters=3, rng=rng)
        x = rng.normal(size=(2, 7, 5))
        target = rng.normal(size=(2, 7, 3))

        def loss():
            return float(np.sum(conv.forward(x, {}) * target))

        cache: dict = {}
        out = conv.forward(x, cache)
        dx = conv.backward(target, cache)
        assert out.shape == (2, 7, 3)
        assert rel_err(conv.w.grad, fd_grad(loss, conv.w.value)) < 1e-6
        assert rel_err(conv.b.grad, fd_grad(loss, conv.b.value)) < 1e-6
        assert rel_err(dx, fd_grad(loss, x)) < 1e-6

    def test_short_sequence_stays_defined(self):
        rng = np.random.default_rng(1)
        conv = Conv1d(width=6, in_dim=4, n_filters=2, rng=rng)
        out = conv.forward(rng.normal(size=(1, 5, 4)), {})
        assert out.shape == (1, 5, 2)
        assert np.all(np.isfinite(out))


class TestBatchNorm:
    def test_gradients_train_mode(self):
        rng = np.random.default_rng(2)
        bn = BatchNorm(3)
        bn.gamma.value[:] = rng.normal(1.0, 0.2, size=3)
        bn.beta.value[:] = rng.normal(size=3)
        x = rng.normal(size=(2, 5, 3))
        target = rng.normal(size=(2, 5, 3))

        def loss():
            return float(np.sum(bn.forward(x, True, {}) * target))

        cache: dict = {}
        bn.forward(x, True, cache)
        dx = bn.backward(target, cache)
        assert rel_err(bn.gamma.grad, fd_grad(loss, bn.gamma.value)) < 1e-5
        assert rel_err(bn.beta.grad, fd_grad(loss, bn.beta.value)) < 1e-5
        assert rel_err(dx, fd_grad(loss, x)) < 1e-5

    def test_running_stats_used_in_eval(self):
        rng = np.random.default_rng(3)
        bn = BatchNorm(2, momentum=0.5)
        x = rng.normal(2.0, 3.0, size=(4, 6, 2))
        for _ in range(200):
            bn.forward(x, True, {})
        train_out = bn.forward(x, True, {})
        eval_out = bn.forward(x, False, {})
        np.testing.assert_allclose(eval_out, train_out, atol=1e-6)


class TestPoolAndLinear:
    def test_max_pool_routes_gradient_to_argmax(self):
        x = np.array([[[1.0, 5.0], [3.0, 2.0], [2.0, 5.0]]])
        cache: dict = {}
        out = global_max_pool(x, cache)
        np.testing.assert_array_equal(out, [[3.0, 5.0]])
        dx = global_max_pool_backward(np.array([[1.0, 1.0]]), cache)
        # Ties (channel 1 positions 0 and 2) go to the earliest position.
        np.testing.assert_array_equal(dx, [[[0.0, 1.0], [1.0, 0.0], [0.0, 0.0]]])

    def test_linear_gradients(self):
        rng = np.random.default_rng(4)
        lin = Linear(6, 4, rng)
        x = rng.normal(size=(3, 6))
        target = rng.normal(size=(3, 4))

        def loss():
            return float(np.sum(lin.forward(x, {}) * target))

        cache: dict = {}
        lin.forward(x, cache)
        dx = lin.backward(target, cache)
        assert rel_err(lin.w.grad, fd_grad(loss, lin.w.value)) < 1e-6
        assert rel_err(lin.b.grad, fd_grad(loss, lin.b.value)) < 1e-6
        assert rel_err(dx, fd_grad(loss, x)) < 1e-6


class TestSoftmaxCrossEntropy:
    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(5)
        probs = softmax(rng.normal(size=(8, 5)))
        np.testing.assert_allclose(probs.sum(axis=1), 1.0, atol=1e-9)

    def test_gradient(self):
        rng = np.random.default_rng(6)
        logits = rng.normal(size=(4, 3))
        y = np.array([0, 2, 1, 1])

        def loss():
            return softmax_cross_entropy(logits, y)[0]

        _, dlogits = softmax_cross_entropy(logits, y)
        assert rel_err(dlogits, fd_grad(loss, logits)) < 1e-6

    def test_non_finite_rejected(self):
        with pytest.raises(NumericError):
            softmax_cross_entropy(np.array([[np.nan, 0.0]]), np.array([0]))


class TestSchedule:
    def test_warmup_then_linear_decay(self):
        lrs = [linear_warmup_schedule(s, 100, 1.0, 0.1) for s in range(100)]
        assert lrs[9] == pytest.approx(1.0)  # end of warmup
        assert lrs[0] == pytest.approx(0.1)
        assert all(a <= b + 1e-12 for a, b in zip(lrs[:9], lrs[1:10]))
        assert all(a >= b - 1e-12 for a, b in zip(lrs[10:], lrs[11:]))
        assert lrs[-1] == pytest.approx(1.0 / 90)


class TestAdamW:
    def test_decoupled_decay_shrinks_decayed_params_only(self):
        decayed = Param(np.ones(3))
        plain = Param(np.ones(3), decay=False)
        opt = AdamW({"w": decayed, "b": plain}, weight_decay=0.5)
        opt.step(0.1)  # zero gradients: only decay acts
        assert np.all(decayed.value < 1.0)
        np.testing.assert_array_equal(plain.value, 1.0)

    def test_frozen_params_never_move(self):
        frozen = Param(np.ones(2), trainable=False)
        frozen.grad[:] = 5.0
        opt = AdamW({"w": frozen})
        opt.step(0.1)
        np.testing.assert_array_equal(frozen.value, 1.0)


def direct_head_oracle(head: ClassifierHead, x: np.ndarray) -> np.ndarray:
    """Re-implements the head with explicit loops: same-padded convolution,
    batch-statistics normalization, ReLU, global max pool, affine output."""
    batch, seq, _ = x.shape
    pooled_parts = []
    for width in head.cfg.filter_widths:
        w = head.convs[width].w.value  # (width, in_dim, filters)
        left = (width - 1) // 2
        conv = np.zeros((batch, seq, w.shape[2]))
        for b in range(batch):
            for t in range(seq):
                for u in range(width):
                    src = t - left + u
                    if 0 <= src < seq:
                        conv[b, t] += x[b, src] @ w[u]
        mean = conv.mean(axis=(0, 1))
        var = conv.var(axis=(0, 1))
        bn = head.bns[width]
        normed = (conv - mean) / np.sqrt(var + bn.eps)
        normed = bn.gamma.value * normed + bn.beta.value
        act = np.maximum(normed, 0.0)
        pooled_parts.append(act.max(axis=1))
    feats = np.concatenate(pooled_parts, axis=1)
    return feats @ head.out.w.value + head.out.b.value


class TestClassifierHead:
    def test_matches_direct_oracle_on_five_tokens(self):
        # Sequence shorter than the widest filter: zero padding keeps every
        # width defined; verified against an independent looped convolution.
        rng = np.random.default_rng(7)
        head = ClassifierHead("h", 4, 3, HeadConfig(n_filters=2, dropout=0.0), rng)
        head.bns[3].gamma.value[:] = rng.normal(1.0, 0.1, size=2)
        x = rng.normal(size=(2, 5, 4))
        got = head.forward(x, train=True, rng=None)
        np.testing.assert_allclose(got, direct_head_oracle(head, x), atol=1e-10)

    def test_zero_input_zero_bias_gives_bias_logits(self):
        rng = np.random.default_rng(8)
        head = ClassifierHead("h", 4, 3, HeadConfig(n_filters=2, dropout=0.0), rng)
        head.out.b.value[:] = [0.5, -1.0, 2.0]
        x = np.zeros((1, 6, 4))
        logits = head.forward(x, train=False, rng=None)
        np.testing.assert_allclose(logits, [[0.5, -1.0, 2.0]], atol=1e-12)

    @pytest.mark.parametrize("seq_len", [6, 9, 33])
    def test_output_shape_contract(self, seq_len):
        rng = np.random.default_rng(9)
        head = ClassifierHead("h", 5, 7, HeadConfig(n_filters=3, dropout=0.0), rng)
        logits = head.forward(rng.normal(size=(2, seq_len, 5)), train=False, rng=None)
        assert logits.shape == (2, 7)

    def test_non_finite_activations_name_the_head(self):
        rng = np.random.default_rng(10)
        head = ClassifierHead("broken-head", 4, 3, HeadConfig(n_filters=2, dropout=0.0), rng)
        x = np.full((1, 6, 4), np.inf)
        with np.errstate(invalid="ignore"):
            with pytest.raises(NumericError, match="broken-head"):
                head.forward(x, train=True, rng=None)
