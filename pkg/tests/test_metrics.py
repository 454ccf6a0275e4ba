"""Tests for attribution scoring and the experiment statistics."""
import numpy as np
import pytest

from gtx.dataset import Dataset
from gtx.derive import NEG, POS, ExplanationMask
from gtx.explainers import AttributionFile, AttributionRecord
from gtx.metrics import (
    DegenerateStatisticError,
    ScoreMismatchError,
    auc,
    k_accuracy,
    pearson,
    score_attributions,
    top_k_mask,
)


def mask(length, covered):
    return ExplanationMask(length, frozenset(covered))


class TestTopKMask:
    def test_picks_largest(self):
        m = top_k_mask([0.1, 0.9, 0.5, 0.7], k=2)
        assert m.covered == {1, 3}
        assert m.length == 4

    def test_ties_resolve_to_lowest_index(self):
        assert top_k_mask([1.0, 1.0, 0.5], k=2).covered == {0, 1}
        assert top_k_mask([0.5, 1.0, 1.0], k=1).covered == {1}
        assert top_k_mask([2.0, 2.0, 2.0, 2.0], k=3).covered == {0, 1, 2}

    def test_signed_by_default(self):
        # a large negative score is a vote against, not a top position
        assert top_k_mask([-2.0, 1.0, 0.0], k=1).covered == {1}

    def test_by_magnitude(self):
        assert top_k_mask([-2.0, 1.0, 0.0], k=1, by_magnitude=True).covered == {0}

    @pytest.mark.parametrize("k", [0, 4, -1])
    def test_k_bounds(self, k):
        with pytest.raises(ValueError, match="k must be"):
            top_k_mask([0.1, 0.2, 0.3], k=k)


class TestKAccuracy:
    def test_full_overlap(self):
        assert k_accuracy(mask(5, {0, 1}), mask(5, {0, 1, 2}), k=2) == 1.0

    def test_partial_overlap(self):
        assert k_accuracy(mask(5, {0, 1, 3}), mask(5, {0, 1, 2}), k=3) == pytest.approx(2 / 3)

    def test_no_overlap(self):
        assert k_accuracy(mask(5, {3, 4}), mask(5, {0, 1}), k=2) == 0.0

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="different lengths"):
            k_accuracy(mask(5, {0}), mask(6, {0}), k=1)

    def test_wrong_cover_size(self):
        with pytest.raises(ValueError, match="exactly 2"):
            k_accuracy(mask(5, {0}), mask(5, {0, 1}), k=2)

    def test_empty_truth_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            k_accuracy(mask(5, {0}), mask(5, set()), k=1)


class TestAuc:
    def test_perfect_separation(self):
        assert auc([0.9, 0.8, 0.2, 0.1], [1, 1, 0, 0]) == 1.0

    def test_perfectly_wrong(self):
        assert auc([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]) == 0.0

    def test_hand_computed(self):
        # pairs won: (.35 > .1), (.8 > .1), (.8 > .4); lost: (.35 < .4)
        assert auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == pytest.approx(0.75)

    def test_all_tied_is_half(self):
        assert auc([0.5, 0.5, 0.5, 0.5], [1, 0, 1, 0]) == pytest.approx(0.5)

    def test_midrank_ties(self):
        # tie with the negative counts half a win
        assert auc([0.5, 0.5, 0.2], [1, 0, 0]) == pytest.approx(0.75)

    def test_single_class_rejected(self):
        with pytest.raises(DegenerateStatisticError, match="both classes"):
            auc([0.1, 0.2], [1, 1])

    def test_length_mismatch(self):
        with pytest.raises(ValueError, match="differ in length"):
            auc([0.1, 0.2], [1, 0, 1])


class TestPearson:
    def test_perfect_positive(self):
        assert pearson([1, 2, 3, 4], [10, 20, 30, 40]) == pytest.approx(1.0)

    def test_perfect_negative(self):
        assert pearson([1, 2, 3, 4], [4, 3, 2, 1]) == pytest.approx(-1.0)

    def test_matches_numpy(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=40)
        y = 0.3 * x + rng.normal(size=40)
        assert pearson(x, y) == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-12)

    def test_zero_variance_rejected(self):
        with pytest.raises(DegenerateStatisticError, match="zero variance"):
            pearson([1.0, 1.0, 1.0], [1.0, 2.0, 3.0])

    @pytest.mark.parametrize("xs,ys", [([1.0], [2.0]), ([1, 2], [1, 2, 3])])
    def test_input_shape_rejected(self, xs, ys):
        with pytest.raises(ValueError, match="same-length"):
            pearson(xs, ys)


def tiny_dataset():
    instances = (
        # truth masks: index 0 pins {0,1}, index 2 pins {2,3}
        _inst(POS, "1100", {0, 1}),
        _inst(NEG, "0000", set()),
        _inst(POS, "0011", {2, 3}),
    )
    return Dataset(alphabet=("0", "1"), string_length=4, pos_threshold=1,
                   instances=instances)


def _inst(label, string, covered):
    from gtx.derive import LabeledInstance
    return LabeledInstance(label, string, mask(len(string), covered))


def attr_file(sha, records):
    return AttributionFile(dataset_sha256=sha, explainer="test", model="m",
                           instances=tuple(records))


class TestScoreAttributions:
    def test_scores_positive_hits_only(self):
        ds = tiny_dataset()
        records = [
            AttributionRecord(0, POS, (0.9, 0.8, 0.1, 0.0)),   # top-2 {0,1}: hit
            AttributionRecord(1, POS, (0.9, 0.8, 0.1, 0.0)),   # true label NEG: skip
            AttributionRecord(2, NEG, (0.0, 0.0, 0.9, 0.8)),   # predicted NEG: skip
        ]
        summary = score_attributions(ds, attr_file(ds.sha256(), records), k=2)
        assert summary.num_scored == 1
        assert summary.num_skipped == 2
        assert summary.per_instance == ((0, 1.0),)
        assert summary.mean == 1.0
        assert summary.std == 0.0

    def test_mean_over_scored(self):
        ds = tiny_dataset()
        records = [
            AttributionRecord(0, POS, (0.9, 0.8, 0.1, 0.0)),   # 2/2 correct
            AttributionRecord(2, POS, (0.0, 0.9, 0.8, 0.0)),   # picks {1,2}: 1/2
        ]
        summary = score_attributions(ds, attr_file(ds.sha256(), records), k=2)
        assert summary.num_scored == 2
        assert summary.mean == pytest.approx(0.75)
        assert summary.per_instance == ((0, 1.0), (2, 0.5))

    def test_nothing_scored_gives_no_mean(self):
        ds = tiny_dataset()
        records = [AttributionRecord(1, POS, (0.1, 0.2, 0.3, 0.4))]
        summary = score_attributions(ds, attr_file(ds.sha256(), records), k=2)
        assert summary.num_scored == 0
        assert summary.mean is None
        assert summary.std is None

    def test_by_magnitude_changes_ranking(self):
        ds = tiny_dataset()
        records = [AttributionRecord(0, POS, (-0.9, -0.8, 0.1, 0.05))]
        signed = score_attributions(ds, attr_file(ds.sha256(), records), k=2)
        magnitude = score_attributions(ds, attr_file(ds.sha256(), records), k=2,
                                       by_magnitude=True)
        assert signed.per_instance == ((0, 0.0),)
        assert magnitude.per_instance == ((0, 1.0),)

    def test_hash_gate(self):
        ds = tiny_dataset()
        records = [AttributionRecord(0, POS, (0.9, 0.8, 0.1, 0.0))]
        with pytest.raises(ScoreMismatchError, match="made for dataset"):
            score_attributions(ds, attr_file("deadbeef", records), k=2)

    def test_explicit_hash_overrides(self):
        ds = tiny_dataset()
        records = [AttributionRecord(0, POS, (0.9, 0.8, 0.1, 0.0))]
        summary = score_attributions(ds, attr_file("external", records), k=2,
                                     dataset_sha256="external")
        assert summary.num_scored == 1

    def test_index_out_of_range(self):
        ds = tiny_dataset()
        records = [AttributionRecord(5, POS, (0.9, 0.8, 0.1, 0.0))]
        with pytest.raises(ScoreMismatchError, match="out of range"):
            score_attributions(ds, attr_file(ds.sha256(), records), k=2)

    def test_wrong_score_length(self):
        ds = tiny_dataset()
        records = [AttributionRecord(0, POS, (0.9, 0.8))]
        with pytest.raises(ScoreMismatchError, match="2 scores"):
            score_attributions(ds, attr_file(ds.sha256(), records), k=2)

    def test_to_dict_shape(self):
        ds = tiny_dataset()
        records = [AttributionRecord(0, POS, (0.9, 0.8, 0.1, 0.0))]
        summary = score_attributions(ds, attr_file(ds.sha256(), records), k=2)
        d = summary.to_dict()
        assert d["k"] == 2
        assert d["explainer"] == "test"
        assert d["num_scored"] == 1
        assert d["per_instance"] == [[0, 1.0]]
