"""Issue corpus ingestion: normalization, owner resolution, filtering, splitting.

Raw issues arrive as JSON-Lines, one object per line with fields
``id, title, description, created_at (RFC3339), components[],
events[{actor, kind, occurred_at}]`` and an optional ``assignee``.
Ingestion normalizes the concatenated title+description, resolves an owner
for every report (directly assigned developer first, otherwise the latest
commit/PR author), drops reports without an owner signal or with too little
text, restricts the corpus to active developers, and splits chronologically.
"""

from __future__ import annotations

import json
import math
import re
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, EmptyCorpusError

EVENT_KINDS = ("assignment", "commit_or_pr", "discussion")

MIN_WORDS = 15

# Alphanumeric-only sentinel: survives the special-character sweep, is
# restored to the angle-bracket token afterwards, and never contains "0x".
_HEX_SENTINEL = "HXSENTINEL7Q4ZJK"

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
# ISO-8601 dates with optional time component, plus bare HH:MM:SS clock times.
_ISO_TS_RE = re.compile(
    r"\b\d{4}-\d{2}-\d{2}(?:[Tt ]\d{2}:\d{2}:\d{2}(?:\.\d+)?(?:Z|[+-]\d{2}:?\d{2})?)?\b"
)
_CLOCK_RE = re.compile(r"\b\d{1,2}:\d{2}:\d{2}\b")
_HEX_RE = re.compile(r"0x[0-9a-fA-F]+")
_SPECIAL_RE = re.compile(r"[^\w\s]", re.UNICODE)


@dataclass(frozen=True)
class InteractionEvent:
    """A single timeline event on an issue."""

    actor: str
    kind: str
    occurred_at: datetime

    def __post_init__(self) -> None:
        if self.kind not in EVENT_KINDS:
            raise DataError(
                f"unknown interaction kind {self.kind!r} for event by "
                f"{self.actor!r} at {self.occurred_at.isoformat()}"
            )


@dataclass
class BugReport:
    """One issue with its normalized text, owner label, and timeline."""

    id: str
    title: str
    description: str
    created_at: datetime
    owner: str | None = None
    components: tuple[str, ...] = ()
    events: tuple[InteractionEvent, ...] = ()
    text: str = ""

    @property
    def word_count(self) -> int:
        return len(self.text.split())


@dataclass(frozen=True)
class DeveloperProfile:
    """A candidate developer with their corpus-wide contribution count."""

    id: str
    contribution_count: int
    active: bool


@dataclass(frozen=True)
class SampleWeights:
    """Per-issue selection probabilities, inversely proportional to the
    owner's issue frequency."""

    issue_ids: tuple[str, ...]
    probabilities: np.ndarray

    def __post_init__(self) -> None:
        total = float(self.probabilities.sum())
        if not math.isclose(total, 1.0, abs_tol=1e-9):
            raise DataError(f"sampling weights sum to {total}, expected 1.0")


def normalize_text(raw: str) -> str:
    """Normalize issue text.

    Removes URLs, ISO-8601/clock timestamps, code-fence markers, and special
    characters; replaces hexadecimal literals (``0x...``) with the ``<hex>``
    token; collapses whitespace. Total and idempotent.
    """
    text = _URL_RE.sub(" ", raw)
    text = _ISO_TS_RE.sub(" ", text)
    text = _CLOCK_RE.sub(" ", text)
    text = text.replace("```", " ")
    # Protect previously emitted tokens so a second pass is a no-op.
    text = text.replace("<hex>", _HEX_SENTINEL)
    text = _HEX_RE.sub(_HEX_SENTINEL, text)
    text = _SPECIAL_RE.sub(" ", text)
    text = text.replace(_HEX_SENTINEL, "<hex>")
    return " ".join(text.split())


def resolve_owner(report: BugReport) -> str | None:
    """Resolve the owning developer from the report timeline.

    The latest assignment event wins; without assignments, the author of the
    latest commit/PR event wins. Returns ``None`` when neither signal exists
    (the report is then discarded by ingestion). Equal timestamps are broken
    by event list order, the later entry winning.
    """
    best: tuple[datetime, int] | None = None
    actor: str | None = None
    for idx, ev in enumerate(report.events):
        if ev.kind != "assignment":
            continue
        key = (ev.occurred_at, idx)
        if best is None or key > best:
            best, actor = key, ev.actor
    if actor is not None:
        return actor
    for idx, ev in enumerate(report.events):
        if ev.kind != "commit_or_pr":
            continue
        key = (ev.occurred_at, idx)
        if best is None or key > best:
            best, actor = key, ev.actor
    return actor


def developer_profiles(
    reports: Sequence[BugReport], threshold: int = 20
) -> dict[str, DeveloperProfile]:
    """Contribution counts over owned reports in the full (pre-split) corpus."""
    counts: Counter[str] = Counter(r.owner for r in reports if r.owner is not None)
    return {
        dev: DeveloperProfile(dev, n, n >= threshold) for dev, n in sorted(counts.items())
    }


def filter_and_split(
    reports: Sequence[BugReport],
    threshold: int = 20,
    train_fraction: float = 0.9,
    min_words: int = MIN_WORDS,
) -> tuple[list[BugReport], list[BugReport]]:
    """Drop short-text reports and inactive owners, then split chronologically.

    Contribution counts are taken over the full input corpus before any
    dropping. Survivors are sorted by ``created_at`` (ties by id) and the
    first ``floor(train_fraction * N)`` become the training split.
    """
    if not 0.0 < train_fraction < 1.0:
        raise DataError(f"train_fraction must be in (0, 1), got {train_fraction}")
    profiles = developer_profiles(reports, threshold)
    survivors = [
        r
        for r in reports
        if r.owner is not None
        and r.word_count >= min_words
        and profiles[r.owner].contribution_count >= threshold
    ]
    if not survivors:
        raise EmptyCorpusError(
            f"no report survived filtering (threshold={threshold}, min_words={min_words})"
        )
    survivors.sort(key=lambda r: (r.created_at, r.id))
    n_train = int(math.floor(train_fraction * len(survivors)))
    return survivors[:n_train], survivors[n_train:]


def sampling_weights(train: Sequence[BugReport]) -> SampleWeights:
    """Selection probability of issue i: ``(1/f_i) / sum_j (1/f_j)`` where
    ``f_i`` is how many training issues its owner owns."""
    freq: Counter[str] = Counter(r.owner for r in train)
    inv = np.array([1.0 / freq[r.owner] for r in train], dtype=np.float64)
    return SampleWeights(
        issue_ids=tuple(r.id for r in train),
        probabilities=inv / inv.sum(),
    )


# ---------------------------------------------------------------------------
# JSONL (de)serialization


def parse_rfc3339(value: str) -> datetime:
    """Parse an RFC3339 timestamp to an aware UTC datetime."""
    text = value.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        dt = datetime.fromisoformat(text)
    except ValueError as exc:
        raise DataError(f"unparseable timestamp {value!r}") from exc
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    return dt.astimezone(timezone.utc)


def report_from_record(record: dict) -> BugReport:
    """Build a report from one raw JSONL object, normalizing its text and
    resolving the owner (``assignee`` field wins over timeline events)."""
    try:
        report_id = str(record["id"])
        title = record.get("title") or ""
        description = record.get("description") or ""
        created_at = parse_rfc3339(record["created_at"])
    except KeyError as exc:
        raise DataError(f"record missing required field {exc}") from exc
    events = tuple(
        InteractionEvent(
            actor=str(ev["actor"]),
            kind=str(ev["kind"]),
            occurred_at=parse_rfc3339(ev["occurred_at"]),
        )
        for ev in record.get("events", [])
    )
    report = BugReport(
        id=report_id,
        title=title,
        description=description,
        created_at=created_at,
        components=tuple(record.get("components", [])),
        events=events,
        text=record.get("text") or normalize_text(f"{title} {description}"),
    )
    owner = record.get("assignee") or record.get("owner")
    report.owner = str(owner) if owner else resolve_owner(report)
    return report


def report_to_record(report: BugReport) -> dict:
    return {
        "id": report.id,
        "title": report.title,
        "description": report.description,
        "created_at": report.created_at.isoformat(),
        "owner": report.owner,
        "components": list(report.components),
        "events": [
            {"actor": e.actor, "kind": e.kind, "occurred_at": e.occurred_at.isoformat()}
            for e in report.events
        ],
        "text": report.text,
    }


def load_jsonl(path: str | Path) -> list[BugReport]:
    """Load reports from a JSONL file; malformed lines raise ``DataError``."""
    reports = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}:{lineno}: invalid JSON: {exc}") from exc
            try:
                reports.append(report_from_record(record))
            except DataError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from exc
    return reports


def save_jsonl(reports: Iterable[BugReport], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for report in reports:
            fh.write(json.dumps(report_to_record(report), sort_keys=True) + "\n")
