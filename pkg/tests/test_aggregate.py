"""Rank aggregation: weighted fusion and Borda count."""

from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from triagekit.aggregate import borda, wra
from triagekit.errors import AlignmentError, ConfigError


class TestWra:
    def test_hand_computed_final_score(self):
        scores = wra({"d": 0.50}, {"d": 0.40}, 0.65)
        assert scores.fs["d"] == pytest.approx(0.76, abs=1e-9)

    def test_zero_interaction_keeps_prediction_score(self):
        scores = wra({"d": 0.37, "e": 0.9}, {"d": 0.0, "e": 0.5}, 0.65)
        assert scores.fs["d"] == pytest.approx(0.37, abs=1e-12)

    def test_vanishing_weight_recovers_content_ranking(self):
        nps = {"a": 0.9, "b": 0.5, "c": 0.1}
        nis = {"a": 0.0, "b": 1.0, "c": 1.0}
        scores = wra(nps, nis, 1e-12)
        assert list(scores.ranked) == ["a", "b", "c"]

    def test_ranking_is_permutation(self):
        nps = {"a": 0.2, "b": 0.8, "c": 0.5}
        nis = {"a": 1.0, "b": 0.0, "c": 0.3}
        assert sorted(wra(nps, nis, 0.5).ranked) == ["a", "b", "c"]

    def test_tie_break_by_nps_then_id(self):
        nps = {"x": 0.5, "y": 0.6, "z": 0.6}
        nis = {"x": 0.2, "y": 0.0, "z": 0.0}
        scores = wra(nps, nis, 0.5)
        # x: 0.6, y: 0.6, z: 0.6 all tie on final score.
        assert list(scores.ranked) == ["y", "z", "x"]

    def test_misaligned_sets_rejected(self):
        with pytest.raises(AlignmentError):
            wra({"a": 0.1}, {"b": 0.1}, 0.5)

    def test_weight_outside_open_interval_rejected(self):
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ConfigError):
                wra({"a": 0.1}, {"a": 0.1}, bad)

    @given(st.floats(min_value=-5, max_value=5))
    @settings(max_examples=50)
    def test_constant_nps_shift_preserves_order(self, shift):
        nps = {"a": 0.9, "b": 0.4, "c": 0.2}
        nis = {"a": 0.0, "b": 0.8, "c": 0.1}
        base = wra(nps, nis, 0.45).ranked
        shifted = wra({k: v + shift for k, v in nps.items()}, nis, 0.45).ranked
        assert base == shifted

    def test_interaction_weight_only_promotes_interacting_devs(self):
        # sign(fs(d) - fs(e)) with nis(d)=0 < nis(e) is non-increasing in weight.
        nps = {"d": 0.8, "e": 0.5}
        nis = {"d": 0.0, "e": 1.0}
        signs = []
        for w in [0.05, 0.2, 0.35, 0.5, 0.65, 0.8, 0.95]:
            fs = wra(nps, nis, w).fs
            diff = fs["d"] - fs["e"]
            signs.append(0 if abs(diff) < 1e-12 else (1 if diff > 0 else -1))
        assert signs == sorted(signs, reverse=True)


class TestBorda:
    def test_identical_rankings_unchanged(self):
        ranking = ["x", "y", "z", "w"]
        assert borda(ranking, ranking) == ranking

    def test_opposed_rankings_tie_break_by_first(self):
        assert borda(["X", "Y", "Z"], ["Z", "Y", "X"]) == ["X", "Y", "Z"]

    def test_two_candidate_cases(self):
        assert borda(["X", "Y"], ["X", "Y"]) == ["X", "Y"]
        # Opposed two-candidate rankings tie; first ranking breaks it.
        assert borda(["X", "Y"], ["Y", "X"]) == ["X", "Y"]

    def test_points_tally(self):
        # a: X=3 Y=2 Z=1 W=0; b: Y=3 X=2 W=1 Z=0 -> X=5, Y=5, Z=1, W=1.
        got = borda(["X", "Y", "Z", "W"], ["Y", "X", "W", "Z"])
        assert got == ["X", "Y", "Z", "W"]

    def test_different_candidate_sets_rejected(self):
        with pytest.raises(AlignmentError):
            borda(["a", "b"], ["a", "c"])

    def test_duplicate_candidates_rejected(self):
        with pytest.raises(AlignmentError):
            borda(["a", "a"], ["a", "a"])

    def test_output_is_permutation(self):
        a = ["p", "q", "r", "s", "t"]
        b = ["t", "p", "s", "q", "r"]
        assert sorted(borda(a, b)) == sorted(a)
