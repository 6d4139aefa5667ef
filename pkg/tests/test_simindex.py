"""Similarity index: cosine, retrieval thresholds, persistence, providers."""

from __future__ import annotations

from datetime import datetime, timedelta, timezone

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from triagekit.corpus import BugReport
from triagekit.errors import (
    ConfigError,
    DegenerateVectorError,
    IndexBuildError,
    RetrievalError,
)
from triagekit.simindex import (
    HashedBowProvider,
    SimilarityIndex,
    build_index,
    cosine,
    retrieve_similar,
)
from triagekit.testing import check_index_contract, check_provider_contract

T0 = datetime(2024, 5, 1, tzinfo=timezone.utc)


def _report(rid: str, text: str, day: int = 0) -> BugReport:
    return BugReport(
        id=rid, title="", description="",
        created_at=T0 + timedelta(days=day), owner="dev", text=text,
    )


class StubProvider:
    """Returns preset vectors keyed by exact text."""

    def __init__(self, mapping: dict[str, list[float]]):
        self.mapping = {k: np.asarray(v, dtype=np.float64) for k, v in mapping.items()}
        self.dim = len(next(iter(self.mapping.values())))
        self.id = "stub"

    def embed_batch(self, texts):
        return np.stack([self.mapping[t] for t in texts])


class TestCosine:
    def test_identical(self):
        v = np.array([0.3, -1.2, 4.0])
        assert cosine(v, v) == pytest.approx(1.0, abs=1e-12)

    def test_orthogonal(self):
        assert cosine(np.array([1.0, 0.0]), np.array([0.0, 2.0])) == pytest.approx(0.0, abs=1e-12)

    def test_forty_five_degrees(self):
        got = cosine(np.array([1.0, 0.0]), np.array([1.0, 1.0]))
        assert got == pytest.approx(0.70710678, abs=1e-8)

    def test_zero_norm_rejected(self):
        with pytest.raises(DegenerateVectorError):
            cosine(np.zeros(3), np.array([1.0, 0.0, 0.0]))


class TestRetrieval:
    @pytest.fixture()
    def fixture_index(self):
        # Unit-circle vectors with known pairwise cosines against (1, 0).
        provider = StubProvider(
            {
                "q": [1.0, 0.0],
                "exact": [2.0, 0.0],          # cos 1.0
                "close": [1.0, 1.0],          # cos 0.7071
                "mid": [1.0, 2.0],            # cos 0.4472
                "far": [-1.0, 0.5],           # cos negative
            }
        )
        reports = [
            _report("exact", "exact", 0),
            _report("close", "close", 1),
            _report("mid", "mid", 2),
            _report("far", "far", 3),
        ]
        return build_index(reports, provider), _report("query", "q", 9)

    def test_threshold_zero_returns_everything_nonnegative(self, fixture_index):
        index, query = fixture_index
        ids = [i for i, _ in retrieve_similar(query, index, 0.0)]
        assert ids == ["exact", "close", "mid"]

    def test_threshold_one_returns_exact_direction_only(self, fixture_index):
        index, query = fixture_index
        assert [i for i, _ in retrieve_similar(query, index, 1.0)] == ["exact"]

    def test_hand_computed_threshold_subset(self, fixture_index):
        index, query = fixture_index
        hits = retrieve_similar(query, index, 0.45)
        # Brute-force check: qualifying cosines are 1.0 and 1/sqrt(2).
        assert [i for i, _ in hits] == ["exact", "close"]
        assert hits[0][1] == pytest.approx(1.0, abs=1e-9)
        assert hits[1][1] == pytest.approx(0.70710678, abs=1e-8)

    def test_similarities_non_increasing(self, fixture_index):
        index, query = fixture_index
        sims = [s for _, s in retrieve_similar(query, index, 0.0)]
        assert sims == sorted(sims, reverse=True)

    @given(st.tuples(st.floats(0, 1), st.floats(0, 1)))
    @settings(max_examples=50)
    def test_threshold_monotonicity(self, taus):
        provider = HashedBowProvider(dim=32)
        reports = [
            _report("a", "gc pause spike in old generation heap"),
            _report("b", "gc pause regression in young collection"),
            _report("c", "docs fix broken anchor links"),
        ]
        index = build_index(reports, provider)
        query = _report("q", "gc pause in old generation")
        lo, hi = min(taus), max(taus)
        lo_ids = {i for i, _ in retrieve_similar(query, index, lo)}
        hi_ids = {i for i, _ in retrieve_similar(query, index, hi)}
        assert hi_ids <= lo_ids

    def test_tau_out_of_range_rejected(self, fixture_index):
        index, query = fixture_index
        with pytest.raises(ConfigError):
            retrieve_similar(query, index, 1.5)

    def test_degenerate_query_rejected(self):
        provider = HashedBowProvider(dim=16)
        index = build_index([_report("a", "some indexed text here")], provider)
        with pytest.raises(DegenerateVectorError):
            retrieve_similar(_report("q", ""), index, 0.2)

    def test_equal_similarity_ties_break_by_id(self):
        provider = StubProvider({"q": [1.0, 0.0], "t": [3.0, 0.0]})
        reports = [_report("zeta", "t"), _report("alpha", "t")]
        index = build_index(reports, provider)
        assert [i for i, _ in retrieve_similar(_report("q", "q"), index, 0.5)] == ["alpha", "zeta"]


class TestIndexPersistence:
    def test_build_counts_and_unit_norms(self):
        provider = HashedBowProvider(dim=64)
        reports = [_report(f"r{i}", f"crash variant number {i} in parser") for i in range(7)]
        index = build_index(reports, provider)
        assert len(index) == 7
        np.testing.assert_allclose(np.linalg.norm(index.vectors, axis=1), 1.0, atol=1e-6)

    def test_duplicate_texts_identical_vectors(self):
        provider = HashedBowProvider(dim=64)
        index = build_index([_report("a", "same words"), _report("b", "same words")], provider)
        np.testing.assert_array_equal(index.vectors[0], index.vectors[1])

    def test_rebuild_byte_identical(self, tmp_path):
        provider = HashedBowProvider(dim=32)
        reports = [_report(f"r{i}", f"text number {i}") for i in range(4)]
        p1, p2 = tmp_path / "a.bin", tmp_path / "b.bin"
        build_index(reports, provider).save(p1)
        build_index(reports, provider).save(p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_zero_vector_report_rejected(self):
        provider = HashedBowProvider(dim=16)
        with pytest.raises(IndexBuildError, match="empty-one"):
            build_index([_report("empty-one", "")], provider)

    def test_load_with_mismatched_provider_rejected(self, tmp_path):
        path = tmp_path / "i.bin"
        build_index([_report("a", "words here")], HashedBowProvider(dim=16)).save(path)
        with pytest.raises(IndexBuildError):
            SimilarityIndex.load(path, provider=HashedBowProvider(dim=32))

    def test_detached_index_cannot_retrieve(self, tmp_path):
        path = tmp_path / "i.bin"
        build_index([_report("a", "words here")], HashedBowProvider(dim=16)).save(path)
        index = SimilarityIndex.load(path)
        with pytest.raises(RetrievalError):
            retrieve_similar(_report("q", "words"), index, 0.2)


class TestReferenceProviderContract:
    def test_provider_contract(self):
        check_provider_contract(HashedBowProvider(dim=128))

    def test_index_contract(self, tmp_path):
        check_index_contract(HashedBowProvider(dim=128), tmp_path)

    def test_identical_normalized_texts_cosine_one(self):
        provider = HashedBowProvider(dim=64)
        vecs = provider.embed_batch(["jit crash inline", "jit crash inline"])
        assert cosine(vecs[0], vecs[1]) == pytest.approx(1.0, abs=1e-12)
