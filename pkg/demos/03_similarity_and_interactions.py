#!/usr/bin/env python3
"""Similar-issue retrieval and time-decayed interaction scoring.

Builds a similarity index over closed issues, retrieves the ones above the
cosine threshold for a new report, and walks through the interaction score
arithmetic: similarity x interaction points x exponential recency decay.
"""

import math
from datetime import datetime, timedelta, timezone

from triagekit import (
    BugReport,
    HashedBowProvider,
    InteractionEvent,
    InteractionPointTable,
    build_index,
    decay,
    interaction_scores,
    normalize_scores,
    retrieve_similar,
)

NOW = datetime(2024, 7, 1, tzinfo=timezone.utc)


def closed_issue(rid: str, text: str, events) -> BugReport:
    return BugReport(
        id=rid, title="", description="", created_at=NOW - timedelta(days=200),
        owner="someone", events=tuple(events), text=text,
    )


def main() -> None:
    history = [
        closed_issue(
            "gc-1",
            "gc pause spike during old generation collection heap fragmentation",
            [
                InteractionEvent("maria", "commit_or_pr", NOW - timedelta(days=3)),
                InteractionEvent("jakob", "discussion", NOW - timedelta(days=100)),
            ],
        ),
        closed_issue(
            "gc-2",
            "long gc pause old generation compaction stall",
            [InteractionEvent("maria", "assignment", NOW - timedelta(days=40))],
        ),
        closed_issue(
            "docs-1",
            "fix table of contents anchors in contributor guide",
            [InteractionEvent("ines", "commit_or_pr", NOW - timedelta(days=1))],
        ),
    ]
    provider = HashedBowProvider(dim=128)
    index = build_index(history, provider)
    print(f"indexed {len(index)} closed issues at dim {index.dim}\n")

    new_issue = BugReport(
        id="new", title="", description="", created_at=NOW,
        text="gc pause regression in old generation collection",
    )
    tau = 0.4
    hits = retrieve_similar(new_issue, index, tau)
    print(f"issues with cosine >= {tau}:")
    for issue_id, sim in hits:
        print(f"  {issue_id}: {sim:.3f}")

    print("\ndecay behaviour: e^(-rate * days)")
    for days in (0, 3, 40, 100):
        print(f"  rate 0.01, {days:3d} days -> {decay(days, 0.01):.5f}")
    print(f"  rate 0, any age -> {decay(365, 0.0):.1f} (all contributions equal)")

    table = InteractionPointTable(assignment=0.5, commit_or_pr=1.5, discussion=0.2)
    by_id = {r.id: r for r in history}
    similar = [(by_id[i], s) for i, s in hits]
    active = ["maria", "jakob", "ines"]
    raw = interaction_scores(new_issue, similar, table, 0.01, active, NOW)
    nis = normalize_scores(raw)

    print("\nper-developer interaction scores:")
    for dev in active:
        print(f"  {dev}: raw {raw[dev]:.4f}  normalized {nis[dev]:.3f}")

    sim_gc1 = dict(hits)["gc-1"]
    print("\nworked example, maria's commit on gc-1:")
    print(f"  {sim_gc1:.4f} (similarity) x 1.5 (commit points) x e^(-0.01*3)"
          f" = {sim_gc1 * 1.5 * math.exp(-0.03):.4f}")


if __name__ == "__main__":
    main()
