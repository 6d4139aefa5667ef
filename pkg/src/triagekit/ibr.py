"""Interaction-based ranker.

Scores active developers by their historical interactions on issues similar
to the one being triaged. Each interaction contributes

    similarity(new, past_issue) * points(kind) * exp(-decay_rate * t_days)

where ``t_days`` is the whole number of days between the interaction and the
scoring time. Interactions by developers outside the active set are ignored.
Raw scores are min-max normalized when any developer scored above zero.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime
from typing import Mapping, Sequence

from .corpus import BugReport, InteractionEvent
from .errors import ConfigError, DataError

SECONDS_PER_DAY = 86400.0


@dataclass(frozen=True)
class InteractionPointTable:
    """Per-kind interaction weights, each in [0, 2]."""

    assignment: float = 0.5
    commit_or_pr: float = 1.5
    discussion: float = 0.2

    def __post_init__(self) -> None:
        for kind in ("assignment", "commit_or_pr", "discussion"):
            value = getattr(self, kind)
            if not 0.0 <= value <= 2.0:
                raise ConfigError(f"interaction point {kind}={value} outside [0, 2]")

    def points_for(self, event: InteractionEvent) -> float:
        try:
            return getattr(self, event.kind)
        except AttributeError:
            raise DataError(
                f"unknown interaction kind {event.kind!r} for event by "
                f"{event.actor!r} at {event.occurred_at.isoformat()}"
            ) from None


def decay(t_days: float, decay_rate: float) -> float:
    """Exponential recency weight ``exp(-decay_rate * t)``; rate 0 treats all
    contributions equally."""
    if not math.isfinite(t_days):
        raise DataError(f"non-finite interaction age {t_days}")
    return math.exp(-decay_rate * t_days)


def whole_days_between(occurred_at: datetime, now: datetime) -> int:
    """Whole days elapsed (floor). Negative ages are a contract violation:
    callers must score with ``now`` at or after every event."""
    delta = (now - occurred_at).total_seconds()
    if delta < 0:
        raise DataError(
            f"event at {occurred_at.isoformat()} is after scoring time {now.isoformat()}"
        )
    return int(delta // SECONDS_PER_DAY)


def interaction_scores(
    new_issue: BugReport,
    similar: Sequence[tuple[BugReport, float]],
    table: InteractionPointTable,
    decay_rate: float,
    active: Sequence[str],
    now: datetime,
) -> dict[str, float]:
    """Raw interaction score per active developer over the similar issues.

    Every (similar issue, interaction) pair by an active developer adds
    ``sim * points(kind) * exp(-decay_rate * t)``. Developers without
    interactions score 0.
    """
    scores: dict[str, float] = {dev: 0.0 for dev in active}
    for issue, sim in similar:
        for event in issue.events:
            if event.actor not in scores:
                continue
            points = table.points_for(event)
            age = whole_days_between(event.occurred_at, now)
            scores[event.actor] += sim * points * decay(age, decay_rate)
    return scores


def normalize_scores(scores: Mapping[str, float]) -> dict[str, float]:
    """Min-max normalize interaction scores into [0, 1].

    All-zero scores stay zero (the aggregator then passes prediction scores
    through untouched). Equal non-zero scores all map to 1.0.
    """
    if not scores:
        return {}
    values = list(scores.values())
    hi, lo = max(values), min(values)
    if hi == 0.0:
        return {dev: 0.0 for dev in scores}
    if hi == lo:
        return {dev: 1.0 for dev in scores}
    return {dev: (value - lo) / (hi - lo) for dev, value in scores.items()}
