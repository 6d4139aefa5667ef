"""Synthetic corpus builders for demos and tests.

Two planted scenarios exercise the interesting behaviours of the engine:

* ``two_signal_corpus`` - each issue carries two independent marker tokens
  and the class label is their combination, so an encoder that sees only one
  marker family can separate at most half the classes while an ensemble of
  both can separate all of them.
* ``interaction_rescue_corpus`` - a prolific developer dominates the text
  signal for one issue family, but the actual fixer has been committing on
  those issues recently, so interaction evidence must override the content
  ranking to recover the true owner.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from .corpus import BugReport, InteractionEvent

EPOCH = datetime(2024, 1, 1, tzinfo=timezone.utc)


def _day(offset: float) -> datetime:
    return EPOCH + timedelta(days=offset)


def _filler(rng: np.random.Generator, n: int) -> str:
    return " ".join(f"zfill{rng.integers(0, 50)}" for _ in range(n))


@dataclass
class TwoSignalCorpus:
    train: list[BugReport]
    test: list[BugReport]
    labels: tuple[str, ...]


def two_signal_corpus(
    train_per_class: int = 6, test_per_class: int = 4, seed: int = 0
) -> TwoSignalCorpus:
    """Four classes keyed by the cross product of two binary marker tokens."""
    rng = np.random.default_rng(seed)
    train: list[BugReport] = []
    test: list[BugReport] = []
    counter = 0
    for a in (0, 1):
        for b in (0, 1):
            owner = f"dev-{a}{b}"
            for i in range(train_per_class + test_per_class):
                text = f"alpha{a} beta{b} " + _filler(rng, 6)
                report = BugReport(
                    id=f"ts-{counter:04d}",
                    title="",
                    description="",
                    created_at=_day(counter * 0.01),
                    owner=owner,
                    text=text,
                )
                (train if i < train_per_class else test).append(report)
                counter += 1
    return TwoSignalCorpus(
        train=train, test=test, labels=("dev-00", "dev-01", "dev-10", "dev-11")
    )


@dataclass
class RescueCorpus:
    """Planted corpus where interaction history must rescue the true owner."""

    train: list[BugReport]
    test: list[BugReport]
    prolific: str
    fixer: str
    bystander: str


def interaction_rescue_corpus(seed: int = 0) -> RescueCorpus:
    rng = np.random.default_rng(seed)
    prolific, fixer, bystander = "alice", "bob", "carol"
    train: list[BugReport] = []

    def crash_text(marker: str) -> str:
        return (
            f"runtime crash {marker} kernel panic memory fault stack trace register dump "
            f"watchdog reset core file " + _filler(rng, 4)
        )

    # The prolific developer owns the alpha crash family (ownership comes
    # from direct assignment, not timeline events). The fixer has been
    # committing on those issues recently; the owner only commented long ago
    # on a few of them.
    for i in range(20):
        created = _day(i * 5)
        events = []
        if i < 4:
            events.append(
                InteractionEvent(prolific, "discussion", created + timedelta(days=1))
            )
        if i % 2 == 0:
            events.append(InteractionEvent(fixer, "commit_or_pr", _day(110)))
        train.append(
            BugReport(
                id=f"alpha-{i:03d}",
                title="",
                description="",
                created_at=created,
                owner=prolific,
                components=("vm",),
                events=tuple(events),
                text=crash_text("alphafault"),
            )
        )
    # The fixer owns a smaller crash family sharing the generic crash
    # vocabulary, so the content ranker places them second, not first.
    for i in range(6):
        created = _day(2 + i * 15)
        train.append(
            BugReport(
                id=f"beta-{i:03d}",
                title="",
                description="",
                created_at=created,
                owner=fixer,
                components=("gc",),
                text=crash_text("betafault"),
            )
        )
    # Unrelated documentation work keeps a third label in the space.
    for i in range(6):
        created = _day(3 + i * 15)
        train.append(
            BugReport(
                id=f"docs-{i:03d}",
                title="",
                description="",
                created_at=created,
                owner=bystander,
                components=("doc",),
                events=(
                    InteractionEvent(bystander, "discussion", created + timedelta(days=1)),
                ),
                text="documentation typo guide readme chapter section heading anchor "
                "link table contents " + _filler(rng, 4),
            )
        )
    # Validation tail: alpha-flavoured issues actually fixed by the fixer.
    for i in range(3):
        train.append(
            BugReport(
                id=f"val-{i:03d}",
                title="",
                description="",
                created_at=_day(115 + i),
                owner=fixer,
                components=("vm",),
                text=crash_text("alphafault"),
            )
        )
    test = [
        BugReport(
            id=f"test-{i:03d}",
            title="",
            description="",
            created_at=_day(120 + i),
            owner=fixer,
            components=("vm",),
            text=crash_text("alphafault"),
        )
        for i in range(4)
    ]
    train.sort(key=lambda r: (r.created_at, r.id))
    return RescueCorpus(
        train=train, test=test, prolific=prolific, fixer=fixer, bystander=bystander
    )


def random_interaction_fixture(rng: np.random.Generator, max_devs: int = 8, max_events: int = 50):
    """A randomized (similar issues, active set, now) triple for oracle tests."""
    n_devs = int(rng.integers(2, max_devs + 1))
    devs = [f"d{i}" for i in range(n_devs)]
    active = devs[: max(1, n_devs - 1)]  # leave someone inactive
    now = _day(500)
    n_issues = int(rng.integers(1, 7))
    budget = int(rng.integers(1, max_events + 1))
    similar = []
    total = 0
    for j in range(n_issues):
        n_ev = int(rng.integers(0, max(1, budget - total) + 1))
        total += n_ev
        events = tuple(
            InteractionEvent(
                actor=devs[int(rng.integers(0, n_devs))],
                kind=("assignment", "commit_or_pr", "discussion")[int(rng.integers(0, 3))],
                occurred_at=now - timedelta(days=float(rng.uniform(0, 400))),
            )
            for _ in range(n_ev)
        )
        report = BugReport(
            id=f"sim-{j}",
            title="",
            description="",
            created_at=_day(0),
            owner=devs[0],
            events=events,
            text="synthetic",
        )
        similar.append((report, float(rng.uniform(0.0, 1.0))))
    return similar, active, now
