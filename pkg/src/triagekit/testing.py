"""Provider-contract checks shared by every embedding-provider test suite.

Any provider (in-process or remote) must satisfy the same behaviour; the
engine's own suite runs these against the reference provider and external
services can run them unchanged.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import numpy as np

from .corpus import BugReport
from .simindex import EmbeddingProvider, SimilarityIndex, retrieve_similar

UNIT_TOL = 1e-6

PROBE_TEXTS = (
    "jit compiler crashes with segmentation fault during method inlining",
    "jit compiler crash segmentation fault while inlining a method",
    "documentation typo in the contributor guide table of contents",
)


def _reports(texts: list[str]) -> list[BugReport]:
    base = datetime(2024, 1, 1, tzinfo=timezone.utc)
    return [
        BugReport(
            id=f"probe-{i}",
            title="",
            description="",
            created_at=base + timedelta(days=i),
            owner="dev",
            text=text,
        )
        for i, text in enumerate(texts)
    ]


def check_provider_contract(provider: EmbeddingProvider) -> None:
    """Determinism, cardinality, unit norms, and near-duplicate ordering."""
    texts = list(PROBE_TEXTS)
    first = provider.embed_batch(texts)
    second = provider.embed_batch(texts)
    assert first.shape == (len(texts), provider.dim), "one vector per text, provider dim"
    np.testing.assert_array_equal(first, second, err_msg="provider must be deterministic")

    dup = provider.embed_batch([texts[0], texts[0]])
    np.testing.assert_array_equal(dup[0], dup[1], err_msg="identical texts, identical vectors")

    norms = np.linalg.norm(first, axis=1)
    assert np.all(norms > 0), "probe texts must not embed to zero"

    unit = first / norms[:, None]
    near = float(unit[0] @ unit[1])
    far = float(unit[0] @ unit[2])
    assert near > far, f"near-duplicate pair ({near:.3f}) must beat unrelated pair ({far:.3f})"


def check_index_contract(provider: EmbeddingProvider, tmp_path) -> None:
    """Index build/save/load round trip plus retrieval invariants."""
    reports = _reports(list(PROBE_TEXTS))
    index = SimilarityIndex.build(reports, provider)
    assert len(index) == len(reports)
    np.testing.assert_allclose(
        np.linalg.norm(index.vectors, axis=1), 1.0, atol=UNIT_TOL,
        err_msg="stored vectors must be unit norm",
    )

    path = tmp_path / "index.bin"
    index.save(path)
    first_bytes = path.read_bytes()
    SimilarityIndex.build(reports, provider).save(path)
    assert path.read_bytes() == first_bytes, "rebuild must be byte-identical"

    loaded = SimilarityIndex.load(path, provider=provider)
    np.testing.assert_array_equal(loaded.vectors, index.vectors)

    query = reports[0]
    all_hits = retrieve_similar(query, loaded, 0.0)
    assert [h[0] for h in all_hits][0] == "probe-0", "query must match itself first"
    sims = [s for _, s in all_hits]
    assert sims == sorted(sims, reverse=True), "similarities must be non-increasing"
    for tau_lo, tau_hi in [(0.0, 0.3), (0.3, 0.8), (0.8, 1.0)]:
        lo_ids = {h[0] for h in retrieve_similar(query, loaded, tau_lo)}
        hi_ids = {h[0] for h in retrieve_similar(query, loaded, tau_hi)}
        assert hi_ids <= lo_ids, "raising the threshold must only shrink results"
