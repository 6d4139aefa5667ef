"""Rank aggregation: weighted score fusion and a Borda-count baseline."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

from .errors import AlignmentError, ConfigError


@dataclass(frozen=True)
class RecommendationScores:
    """Per-candidate prediction, interaction, and final scores plus the
    resulting ranking."""

    nps: dict[str, float]
    nis: dict[str, float]
    fs: dict[str, float]
    ranked: tuple[str, ...]


def wra(
    nps: Mapping[str, float], nis: Mapping[str, float], weight: float
) -> RecommendationScores:
    """Weighted ranking aggregation: ``final = prediction + weight * interaction``.

    Candidates without interaction evidence (interaction score 0) keep their
    prediction score unchanged. Ranking is by final score descending, ties by
    prediction score descending, then candidate id ascending.
    """
    if not 0.0 < weight < 1.0:
        raise ConfigError(f"aggregation weight must be in (0, 1), got {weight}")
    if set(nps) != set(nis):
        missing = set(nps) ^ set(nis)
        raise AlignmentError(f"score vectors cover different candidates: {sorted(missing)}")
    fs = {dev: nps[dev] + weight * nis[dev] for dev in nps}
    ranked = tuple(sorted(fs, key=lambda dev: (-fs[dev], -nps[dev], dev)))
    return RecommendationScores(nps=dict(nps), nis=dict(nis), fs=fs, ranked=ranked)


def borda(rank_a: Sequence[str], rank_b: Sequence[str]) -> list[str]:
    """Combine two rankings by Borda count.

    Position r (1-indexed) in either ranking earns ``n - r`` points; ties in
    total points are broken by position in the first ranking.
    """
    if set(rank_a) != set(rank_b) or len(rank_a) != len(set(rank_a)) or len(rank_b) != len(set(rank_b)):
        raise AlignmentError("rankings must be permutations of the same candidate set")
    n = len(rank_a)
    points = {dev: 0 for dev in rank_a}
    for ranking in (rank_a, rank_b):
        for position, dev in enumerate(ranking, start=1):
            points[dev] += n - position
    pos_a = {dev: i for i, dev in enumerate(rank_a)}
    return sorted(points, key=lambda dev: (-points[dev], pos_a[dev]))
