import numpy as np
import pytest

from calibsvm.metrics import (
    ConfusionCounts,
    auc,
    brier,
    confusion,
    evaluate_labels,
    precision_sensitivity_f1,
)

from oracles import pair_count_auc


class TestConfusion:
    def test_all_correct(self):
        c = confusion(np.array([1, -1]), np.array([1, -1]))
        assert (c.tp, c.tn, c.fp, c.fn) == (1, 1, 0, 0)

    def test_all_wrong(self):
        c = confusion(np.array([-1, 1]), np.array([1, -1]))
        assert c.tp == 0 and c.tn == 0 and c.fp == 1 and c.fn == 1

    def test_mixed(self):
        c = confusion(np.array([1, 1, -1]), np.array([1, -1, -1]))
        assert (c.tp, c.fp, c.tn, c.fn) == (1, 1, 1, 0)

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            confusion(np.array([1]), np.array([1, -1]))


class TestPrecisionSensitivityF1:
    def test_direct_formula(self):
        pre, sen, f1 = precision_sensitivity_f1(ConfusionCounts(tp=2, fp=1, tn=0, fn=1))
        assert pre == pytest.approx(2 / 3)
        assert sen == pytest.approx(2 / 3)
        assert f1 == pytest.approx(2 / 3)

    def test_zero_denominators_yield_zero(self):
        pre, sen, f1 = precision_sensitivity_f1(ConfusionCounts(tp=0, fp=0, tn=5, fn=0))
        assert (pre, sen, f1) == (0.0, 0.0, 0.0)

    def test_perfect(self):
        assert precision_sensitivity_f1(
            ConfusionCounts(tp=5, fp=0, tn=0, fn=0)) == (1.0, 1.0, 1.0)


class TestAuc:
    def test_perfect_separation(self):
        scores = np.array([0.9, 0.8, 0.2, 0.1])
        labels = np.array([1, 1, -1, -1])
        assert auc(scores, labels) == 1.0

    def test_total_tie_is_half(self):
        assert auc(np.full(6, 0.3), np.array([1, 1, 1, -1, -1, -1])) == 0.5

    def test_four_point_example_no_ties(self):
        # oracle: every positive outranks every negative here, so AUC = 1
        scores = np.array([0.1, 0.4, 0.35, 0.8])
        labels = np.array([-1, 1, -1, 1])
        expected = pair_count_auc(scores, labels)
        assert expected == 1.0
        assert auc(scores, labels) == expected

    def test_four_point_example_with_tie(self):
        # one tied positive/negative pair: 3.5 of 4 pairs ordered correctly
        scores = np.array([0.1, 0.4, 0.4, 0.8])
        labels = np.array([-1, 1, -1, 1])
        expected = pair_count_auc(scores, labels)
        assert expected == 0.875
        assert auc(scores, labels) == expected

    def test_single_class_rejected(self):
        with pytest.raises(ValueError):
            auc(np.array([0.1, 0.2]), np.array([1, 1]))

    def test_complement_symmetry(self):
        rng = np.random.default_rng(12)
        scores = rng.normal(size=30)  # continuous, ties have probability zero
        labels = np.where(rng.uniform(size=30) < 0.4, 1, -1)
        labels[0], labels[1] = 1, -1
        assert auc(scores, labels) + auc(-scores, labels) == pytest.approx(1.0)

    def test_matches_pair_oracle_on_seeded_sweep(self):
        rng = np.random.default_rng(99)
        for _ in range(200):
            m = int(rng.integers(2, 13))
            # coarse grid scores force frequent ties
            scores = rng.integers(0, 4, size=m).astype(float) / 4.0
            labels = np.where(rng.uniform(size=m) < 0.5, 1, -1)
            if np.all(labels == labels[0]):
                labels[0] = -labels[0]
            assert auc(scores, labels) == pair_count_auc(scores, labels)

    def test_invariant_under_strictly_increasing_transform(self):
        rng = np.random.default_rng(21)
        scores = rng.normal(size=40)
        labels = np.where(rng.uniform(size=40) < 0.5, 1, -1)
        labels[:2] = (1, -1)
        transformed = np.tanh(scores) * 3.0 + 1.0
        assert auc(scores, labels) == auc(transformed, labels)


class TestBrier:
    def test_perfect(self):
        assert brier(np.array([1.0, 0.0]), np.array([1, -1])) == 0.0

    def test_constant_half(self):
        assert brier(np.full(4, 0.5), np.array([1, -1, 1, -1])) == 0.25

    def test_hand_value(self):
        assert brier(np.array([0.8, 0.3]), np.array([1, -1])) == pytest.approx(0.065)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            brier(np.array([1.2]), np.array([1]))

    def test_range(self):
        rng = np.random.default_rng(2)
        p = rng.uniform(size=50)
        y = np.where(rng.uniform(size=50) < 0.5, 1, -1)
        assert 0.0 <= brier(p, y) <= 1.0


class TestEvaluateLabels:
    def test_bundles_metrics(self):
        predicted = np.array([1, 1, -1, -1])
        actual = np.array([1, -1, -1, -1])
        scores = np.array([0.9, 0.6, 0.3, 0.1])
        report = evaluate_labels(predicted, actual, scores,
                                 probabilities=scores, threshold=0.5)
        assert report.counts.tp == 1
        assert report.auc == 1.0
        assert report.brier is not None
        assert report.threshold == 0.5
        d = report.to_dict()
        assert d["counts"]["tp"] == 1
