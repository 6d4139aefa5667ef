"""Evaluation harness: Top-k accuracy, class-wise accuracy, orthogonality
counts, and paired significance testing."""

from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .errors import EvalError

TOP_K_LEVELS = (1, 3, 5, 10, 20)


def topk_accuracy(
    predictions: Sequence[Sequence[str]], truth: Sequence[str], k: int
) -> float:
    """Fraction of samples whose true label appears in the first k
    predictions."""
    if len(predictions) != len(truth):
        raise EvalError(f"{len(predictions)} prediction lists for {len(truth)} labels")
    if not truth:
        raise EvalError("empty evaluation set")
    if k < 1:
        raise EvalError(f"k must be >= 1, got {k}")
    hits = sum(1 for ranked, label in zip(predictions, truth) if label in ranked[:k])
    return hits / len(truth)


def hit_indicators(
    predictions: Sequence[Sequence[str]], truth: Sequence[str], k: int
) -> list[int]:
    """Per-sample 0/1 indicators of a Top-k hit."""
    return [1 if label in ranked[:k] else 0 for ranked, label in zip(predictions, truth)]


def per_class_top1(
    predictions: Sequence[Sequence[str]], truth: Sequence[str]
) -> dict[str, float]:
    """Top-1 accuracy per class, over classes with at least one test sample."""
    totals: dict[str, int] = defaultdict(int)
    hits: dict[str, int] = defaultdict(int)
    for ranked, label in zip(predictions, truth):
        totals[label] += 1
        if ranked and ranked[0] == label:
            hits[label] += 1
    return {label: hits[label] / totals[label] for label in sorted(totals)}


def orthogonality(correct_sets: Mapping[str, set]) -> dict[str, int]:
    """Per model: how many samples only that model got right."""
    out: dict[str, int] = {}
    for name, correct in correct_sets.items():
        others: set = set()
        for other_name, other in correct_sets.items():
            if other_name != name:
                others |= set(other)
        out[name] = len(set(correct) - others)
    return out


@dataclass(frozen=True)
class WilcoxonResult:
    p_value: float
    statistic: float
    n_nonzero: int
    method: str
    degenerate: bool = False


def _average_ranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for pos in range(i, j + 1):
            ranks[order[pos]] = avg
        i = j + 1
    return ranks


def _exact_signed_rank_p(ranks: Sequence[float], w_plus: float) -> float:
    """Two-sided exact p-value via the null distribution of the positive-rank
    sum, built by dynamic programming over doubled (integer) ranks."""
    doubled = [int(round(2 * r)) for r in ranks]
    dist: dict[int, int] = {0: 1}
    for d in doubled:
        nxt: dict[int, int] = defaultdict(int)
        for total, count in dist.items():
            nxt[total] += count
            nxt[total + d] += count
        dist = dict(nxt)
    n_total = 2 ** len(doubled)
    w2 = int(round(2 * w_plus))
    p_le = sum(c for total, c in dist.items() if total <= w2) / n_total
    p_ge = sum(c for total, c in dist.items() if total >= w2) / n_total
    return min(1.0, 2.0 * min(p_le, p_ge))


def wilcoxon_paired(
    hits_a: Sequence[float], hits_b: Sequence[float], exact_threshold: int = 10
) -> WilcoxonResult:
    """Two-sided Wilcoxon signed-rank test on paired per-sample outcomes.

    Zero differences are excluded and tied magnitudes receive average ranks.
    Below ``exact_threshold`` non-zero pairs the p-value is exact; otherwise
    a normal approximation with continuity correction is used. All-zero
    differences yield a degenerate p of 1.0.
    """
    if len(hits_a) != len(hits_b):
        raise EvalError(f"paired vectors differ in length: {len(hits_a)} vs {len(hits_b)}")
    diffs = [float(a) - float(b) for a, b in zip(hits_a, hits_b) if a != b]
    n = len(diffs)
    if n == 0:
        return WilcoxonResult(p_value=1.0, statistic=0.0, n_nonzero=0, method="degenerate", degenerate=True)
    ranks = _average_ranks([abs(d) for d in diffs])
    w_plus = sum(r for r, d in zip(ranks, diffs) if d > 0)
    if n < exact_threshold:
        return WilcoxonResult(
            p_value=_exact_signed_rank_p(ranks, w_plus),
            statistic=w_plus,
            n_nonzero=n,
            method="exact",
        )
    mean = n * (n + 1) / 4.0
    sigma = math.sqrt(sum(r * r for r in ranks) / 4.0)
    z = max(0.0, abs(w_plus - mean) - 0.5) / sigma
    p = min(1.0, math.erfc(z / math.sqrt(2.0)))
    return WilcoxonResult(p_value=p, statistic=w_plus, n_nonzero=n, method="normal")


@dataclass
class EvalReport:
    """Aggregated evaluation outputs for one test split."""

    n_test: int
    topk: dict[str, dict[int, float]]
    per_class_top1: dict[str, float]
    orthogonality: dict[str, int]
    p_values: dict[int, float]
    hits: dict[str, dict[int, list[int]]] = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "n_test": self.n_test,
            "topk": {m: {str(k): v for k, v in by_k.items()} for m, by_k in self.topk.items()},
            "per_class_top1": self.per_class_top1,
            "orthogonality": self.orthogonality,
            "p_values": {str(k): v for k, v in self.p_values.items()},
        }


def build_report(
    rankings: Mapping[str, Sequence[Sequence[str]]],
    truth: Sequence[str],
    primary_method: str,
    baseline_method: str,
    k_levels: Sequence[int] = TOP_K_LEVELS,
) -> EvalReport:
    """Score every method's rankings against the truth labels.

    P-values compare the primary method to the baseline per k on paired
    per-sample hit indicators.
    """
    if not truth:
        raise EvalError("empty evaluation set")
    topk: dict[str, dict[int, float]] = {}
    hits: dict[str, dict[int, list[int]]] = {}
    for method, preds in rankings.items():
        topk[method] = {k: topk_accuracy(preds, truth, k) for k in k_levels}
        hits[method] = {k: hit_indicators(preds, truth, k) for k in k_levels}
    correct_sets = {
        method: {i for i, hit in enumerate(hit_indicators(preds, truth, 1)) if hit}
        for method, preds in rankings.items()
    }
    p_values = {
        k: wilcoxon_paired(hits[primary_method][k], hits[baseline_method][k]).p_value
        for k in k_levels
    }
    return EvalReport(
        n_test=len(truth),
        topk=topk,
        per_class_top1=per_class_top1(rankings[primary_method], truth),
        orthogonality=orthogonality(correct_sets),
        p_values=p_values,
        hits=hits,
    )
