#!/usr/bin/env python3
"""Walk through corpus ingestion step by step.

Shows text normalization, owner resolution from timeline events, the
activity filter, the chronological split, and inverse-frequency sampling
weights on a small handmade issue set.
"""

from datetime import datetime, timedelta, timezone

from triagekit import (
    BugReport,
    InteractionEvent,
    developer_profiles,
    filter_and_split,
    normalize_text,
    resolve_owner,
    sampling_weights,
)

T0 = datetime(2024, 1, 1, tzinfo=timezone.utc)


def main() -> None:
    print("=== 1. Text normalization ===")
    raw = (
        "JVM dies at 0x7fff5fbff7a0, see https://ci.example/run/81 "
        "```\nstack trace\n``` logged 2024-01-02T10:30:45Z"
    )
    print("raw:       ", raw.replace("\n", " "))
    print("normalized:", normalize_text(raw))
    print("idempotent:", normalize_text(normalize_text(raw)) == normalize_text(raw))

    print("\n=== 2. Owner resolution ===")
    report = BugReport(
        id="gh-101",
        title="",
        description="",
        created_at=T0,
        events=(
            InteractionEvent("maria", "discussion", T0 + timedelta(days=1)),
            InteractionEvent("jakob", "commit_or_pr", T0 + timedelta(days=2)),
            InteractionEvent("maria", "commit_or_pr", T0 + timedelta(days=3)),
        ),
    )
    print("no assignment events, latest commit wins ->", resolve_owner(report))

    print("\n=== 3. Activity filter and chronological split ===")
    text = "connection pool exhausted under sustained load test with retry storm and timeout cascade observed"
    reports = []
    for i in range(12):
        owner = "maria" if i % 3 else "jakob"
        reports.append(
            BugReport(
                id=f"gh-{i:03d}",
                title="",
                description="",
                created_at=T0 + timedelta(days=i),
                owner=owner,
                text=f"{text} case {i}",
            )
        )
    profiles = developer_profiles(reports, threshold=4)
    for dev, profile in profiles.items():
        print(f"  {dev}: {profile.contribution_count} owned, active={profile.active}")
    train, test = filter_and_split(reports, threshold=4, train_fraction=0.75)
    print(f"split: {len(train)} train / {len(test)} test")
    print("last train:", train[-1].created_at.date(), "| first test:", test[0].created_at.date())

    print("\n=== 4. Sampling weights balance developers ===")
    weights = sampling_weights(train)
    by_dev: dict[str, float] = {}
    for report, p in zip(train, weights.probabilities):
        by_dev[report.owner] = by_dev.get(report.owner, 0.0) + float(p)
    for dev, mass in sorted(by_dev.items()):
        print(f"  {dev}: total sampling mass {mass:.3f}")


if __name__ == "__main__":
    main()
