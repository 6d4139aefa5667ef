"""Evaluation harness: Top-k, class-wise accuracy, orthogonality, Wilcoxon."""

from __future__ import annotations

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from triagekit.errors import EvalError
from triagekit.evaluate import (
    build_report,
    orthogonality,
    per_class_top1,
    topk_accuracy,
    wilcoxon_paired,
)


class TestTopkAccuracy:
    PREDS = [["a", "b", "c"], ["b", "c", "d"]]
    TRUTH = ["a", "d"]

    def test_top1_half(self):
        assert topk_accuracy(self.PREDS, self.TRUTH, 1) == 0.5

    def test_top3_all(self):
        assert topk_accuracy(self.PREDS, self.TRUTH, 3) == 1.0

    def test_never_present_is_zero(self):
        assert topk_accuracy(self.PREDS, ["z", "z"], 5) == 0.0

    def test_empty_rejected(self):
        with pytest.raises(EvalError):
            topk_accuracy([], [], 1)

    @given(
        st.lists(
            st.lists(st.sampled_from("abcdef"), min_size=1, max_size=6, unique=True),
            min_size=1,
            max_size=20,
        ),
        st.data(),
    )
    @settings(max_examples=100)
    def test_monotone_in_k(self, preds, data):
        truth = [data.draw(st.sampled_from("abcdef")) for _ in preds]
        accs = [topk_accuracy(preds, truth, k) for k in (1, 3, 5, 10, 20)]
        assert all(a <= b + 1e-12 for a, b in zip(accs, accs[1:]))


class TestPerClassTop1:
    def test_classes_with_samples_only(self):
        preds = [["a"], ["b"], ["a"]]
        truth = ["a", "a", "b"]
        got = per_class_top1(preds, truth)
        assert got == {"a": 0.5, "b": 0.0}
        assert "c" not in got


class TestOrthogonality:
    def test_hand_case(self):
        got = orthogonality({"p1": {"a", "b", "c"}, "p2": {"b"}})
        assert got == {"p1": 2, "p2": 0}

    def test_identical_sets_zero(self):
        got = orthogonality({"p1": {"a", "b"}, "p2": {"a", "b"}})
        assert got == {"p1": 0, "p2": 0}

    def test_disjoint_sets_full_counts(self):
        got = orthogonality({"p1": {"a"}, "p2": {"b", "c"}})
        assert got == {"p1": 1, "p2": 2}

    def test_sum_bounded_by_union(self):
        sets = {"p1": {1, 2, 3}, "p2": {2, 3, 4}, "p3": {9}}
        counts = orthogonality(sets)
        union = set().union(*sets.values())
        assert sum(counts.values()) <= len(union)


def exact_oracle_p(diffs: list[float]) -> float:
    """Literal enumeration over all 2^n sign assignments of |d| ranks."""
    n = len(diffs)
    mags = [abs(d) for d in diffs]
    order = sorted(range(n), key=lambda i: mags[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and mags[order[j + 1]] == mags[order[i]]:
            j += 1
        for pos in range(i, j + 1):
            ranks[order[pos]] = (i + j) / 2 + 1
        i = j + 1
    observed = sum(r for r, d in zip(ranks, diffs) if d > 0)
    w_values = [
        sum(r for r, s in zip(ranks, signs) if s > 0)
        for signs in itertools.product((-1, 1), repeat=n)
    ]
    total = len(w_values)
    p_le = sum(1 for w in w_values if w <= observed + 1e-12) / total
    p_ge = sum(1 for w in w_values if w >= observed - 1e-12) / total
    return min(1.0, 2.0 * min(p_le, p_ge))


class TestWilcoxon:
    def test_identical_vectors_degenerate(self):
        result = wilcoxon_paired([1, 0, 1, 1], [1, 0, 1, 1])
        assert result.p_value == 1.0
        assert result.degenerate

    def test_strict_dominance_significant(self):
        a = [1] * 12
        b = [0] * 12
        result = wilcoxon_paired(a, b)
        assert result.method == "normal"
        assert result.p_value < 0.01

    def test_exact_matches_enumeration_oracle(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n = int(rng.integers(1, 10))
            a = rng.integers(0, 2, size=14)
            b = a.copy()
            flips = rng.choice(14, size=n, replace=False)
            b[flips] = 1 - b[flips]
            result = wilcoxon_paired(list(a), list(b))
            assert result.method == "exact"
            diffs = [float(x) - float(y) for x, y in zip(a, b) if x != y]
            assert result.p_value == pytest.approx(exact_oracle_p(diffs), abs=1e-9)

    def test_two_sided_symmetry(self):
        rng = np.random.default_rng(4)
        for n in (4, 8, 15, 40):
            a = list(rng.integers(0, 2, size=n))
            b = list(rng.integers(0, 2, size=n))
            assert wilcoxon_paired(a, b).p_value == pytest.approx(
                wilcoxon_paired(b, a).p_value, abs=1e-12
            )

    def test_length_mismatch_rejected(self):
        with pytest.raises(EvalError):
            wilcoxon_paired([1, 0], [1])

    def test_p_value_in_unit_interval(self):
        rng = np.random.default_rng(5)
        for n in (3, 9, 10, 25):
            a = list(rng.integers(0, 2, size=n))
            b = list(rng.integers(0, 2, size=n))
            assert 0.0 <= wilcoxon_paired(a, b).p_value <= 1.0


class TestBuildReport:
    def test_report_shape(self):
        rankings = {
            "hybrid": [["a", "b"], ["b", "a"], ["a", "b"]],
            "content": [["b", "a"], ["b", "a"], ["a", "b"]],
        }
        truth = ["a", "b", "b"]
        report = build_report(rankings, truth, "hybrid", "content")
        assert report.n_test == 3
        assert report.topk["hybrid"][1] == pytest.approx(2 / 3)
        assert report.topk["content"][1] == pytest.approx(1 / 3)
        assert set(report.per_class_top1) == {"a", "b"}
        assert set(report.orthogonality) == {"hybrid", "content"}
        payload = report.to_dict()
        assert payload["topk"]["hybrid"]["1"] == pytest.approx(2 / 3)

    def test_accuracy_monotone_across_standard_levels(self):
        rng = np.random.default_rng(6)
        labels = [f"d{i}" for i in range(25)]
        preds = [list(rng.permutation(labels)) for _ in range(30)]
        truth = [labels[int(rng.integers(0, 25))] for _ in range(30)]
        report = build_report({"m": preds}, truth, "m", "m")
        accs = [report.topk["m"][k] for k in (1, 3, 5, 10, 20)]
        assert accs == sorted(accs)
