import math

import numpy as np
import pytest

from pcaharmony import metrics


def brute_force_counts(pred, gt):
    """Oracle: count the confusion cells one pixel at a time."""
    tp = fp = fn = tn = 0
    for i in range(pred.shape[0]):
        for j in range(pred.shape[1]):
            p, g = int(pred[i, j]), int(gt[i, j])
            if p == 1 and g == 1:
                tp += 1
            elif p == 1 and g == 0:
                fp += 1
            elif p == 0 and g == 1:
                fn += 1
            else:
                tn += 1
    return tp, fp, fn, tn


def random_mask_pairs(count, rng, max_side=64):
    for _ in range(count):
        h = int(rng.integers(1, max_side + 1))
        w = int(rng.integers(1, max_side + 1))
        density = rng.uniform(0.0, 0.6)
        pred = (rng.random((h, w)) < density).astype(np.uint8)
        gt = (rng.random((h, w)) < density).astype(np.uint8)
        yield pred, gt


class TestBinarize:
    def test_threshold_is_inclusive(self):
        prob = np.array([[0.4999, 0.5, 0.5001]])
        np.testing.assert_array_equal(metrics.binarize(prob), [[0, 1, 1]])

    def test_custom_threshold(self):
        prob = np.array([[0.1, 0.3]])
        np.testing.assert_array_equal(metrics.binarize(prob, 0.2), [[0, 1]])

    def test_threshold_bounds_open(self):
        prob = np.ones((2, 2))
        for bad in (0.0, 1.0, -0.2, 1.5):
            with pytest.raises(ValueError, match="threshold"):
                metrics.binarize(prob, bad)

    def test_dtype(self):
        assert metrics.binarize(np.ones((2, 2)) * 0.7).dtype == np.uint8


class TestConfusion:
    def test_matches_pixel_loop_oracle(self):
        rng = np.random.default_rng(101)
        degenerate_seen = 0
        for pred, gt in random_mask_pairs(200, rng):
            counts = metrics.confusion(pred, gt)
            assert (counts.tp, counts.fp, counts.fn, counts.tn) == brute_force_counts(pred, gt)
            if counts.degenerate:
                degenerate_seen += 1
        assert degenerate_seen > 0

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            metrics.confusion(np.zeros((2, 2), dtype=np.uint8), np.zeros((3, 3), dtype=np.uint8))

    def test_non_binary_rejected(self):
        with pytest.raises(ValueError, match="binary"):
            metrics.confusion(np.full((2, 2), 3, dtype=np.uint8), np.zeros((2, 2), dtype=np.uint8))


class TestRatios:
    def test_recall_hand_case(self):
        counts = metrics.ConfusionCounts(tp=3, fp=0, fn=1, tn=0)
        assert metrics.recall(counts) == pytest.approx(0.75)

    def test_recall_empty_gt_convention(self):
        counts = metrics.ConfusionCounts(tp=0, fp=2, fn=0, tn=5)
        assert counts.degenerate
        assert metrics.recall(counts) == 1.0

    def test_precision_conventions(self):
        assert metrics.precision(metrics.ConfusionCounts(3, 1, 0, 0)) == pytest.approx(0.75)
        assert metrics.precision(metrics.ConfusionCounts(0, 0, 4, 2)) == 1.0

    def test_dice_hand_cases(self):
        a = np.array([[1, 1], [0, 0]], dtype=np.uint8)
        assert metrics.dice(a, a) == 1.0
        b = np.array([[0, 0], [1, 1]], dtype=np.uint8)
        assert metrics.dice(a, b) == 0.0
        empty = np.zeros((2, 2), dtype=np.uint8)
        assert metrics.dice(empty, empty) == 1.0
        assert metrics.dice_from_counts(metrics.ConfusionCounts(2, 1, 1, 0)) == pytest.approx(4 / 6)

    def test_dice_bounded_by_recall_and_precision(self):
        rng = np.random.default_rng(102)
        for pred, gt in random_mask_pairs(100, rng, max_side=32):
            counts = metrics.confusion(pred, gt)
            d = metrics.dice_from_counts(counts)
            assert d <= 2 * metrics.recall(counts) + 1e-12
            assert d <= 2 * metrics.precision(counts) + 1e-12
            assert 0.0 <= d <= 1.0


class TestDatasetScores:
    def test_mean_matches_resummation(self):
        rng = np.random.default_rng(103)
        scores = []
        for i, (pred, gt) in enumerate(random_mask_pairs(40, rng, max_side=16)):
            gt[0, 0] = 1  # keep every image non-degenerate
            scores.append(metrics.score_pair(pred, gt, id=f"img{i}"))
        agg = metrics.dataset_scores(scores)
        assert agg.recall == pytest.approx(sum(s.recall for s in scores) / len(scores))
        assert agg.dice == pytest.approx(sum(s.dice for s in scores) / len(scores))
        assert agg.n_scored == 40
        assert agg.n_degenerate == 0

    def test_degenerate_excluded_by_default(self):
        full = np.ones((2, 2), dtype=np.uint8)
        empty = np.zeros((2, 2), dtype=np.uint8)
        scores = [
            metrics.score_pair(full, full, id="good"),
            metrics.score_pair(empty, empty, id="no_gt"),
        ]
        assert scores[1].degenerate
        agg = metrics.dataset_scores(scores)
        assert agg.n_scored == 1
        assert agg.n_degenerate == 1
        assert agg.recall == 1.0

    def test_degenerate_can_be_included(self):
        full = np.ones((2, 2), dtype=np.uint8)
        empty = np.zeros((2, 2), dtype=np.uint8)
        scores = [
            metrics.score_pair(full, full),
            metrics.score_pair(full, empty),  # recall 1.0 by convention, dice 0
        ]
        agg = metrics.dataset_scores(scores, include_degenerate=True)
        assert agg.n_scored == 2
        assert agg.dice == pytest.approx(0.5)

    def test_empty_input_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            metrics.dataset_scores([])

    def test_all_degenerate_rejected(self):
        empty = np.zeros((2, 2), dtype=np.uint8)
        scores = [metrics.score_pair(empty, empty)]
        with pytest.raises(ValueError, match="degenerate"):
            metrics.dataset_scores(scores)


class TestLoss:
    def test_hand_worked_value(self):
        # gt has two positives of four pixels, prob is flat 0.5; with a
        # vanishing smooth term the dice part is 1 - 2/4 and the cross
        # entropy part is ln 2
        gt = np.array([[1, 1], [0, 0]], dtype=np.uint8)
        prob = np.full((2, 2), 0.5)
        config = metrics.LossConfig(beta=0.5, smooth=1e-12)
        expected = 0.25 + 0.5 * math.log(2.0)
        assert metrics.combined_loss(prob, gt, config) == pytest.approx(expected, abs=1e-9)

    def test_beta_mixes_parts(self):
        rng = np.random.default_rng(104)
        prob = rng.random((8, 8))
        gt = (rng.random((8, 8)) < 0.4).astype(np.uint8)
        dice_part = metrics.combined_loss(prob, gt, metrics.LossConfig(beta=1.0))
        bce_part = metrics.combined_loss(prob, gt, metrics.LossConfig(beta=0.0))
        mixed = metrics.combined_loss(prob, gt, metrics.LossConfig(beta=0.3))
        assert mixed == pytest.approx(0.3 * dice_part + 0.7 * bce_part, rel=1e-12)

    def test_extreme_probabilities_stay_finite(self):
        gt = np.array([[1, 0]], dtype=np.uint8)
        prob = np.array([[0.0, 1.0]])  # exactly wrong, would be -inf unclipped
        value = metrics.combined_loss(prob, gt)
        assert math.isfinite(value)
        assert value <= -math.log(1e-7) + 1.0

    def test_perfect_prediction_loss_near_zero(self):
        gt = np.array([[1, 0], [0, 1]], dtype=np.uint8)
        prob = gt.astype(np.float64)
        value = metrics.combined_loss(prob, gt, metrics.LossConfig(smooth=1e-12))
        assert value == pytest.approx(0.0, abs=1e-5)

    def test_hard_probabilities_match_discrete_dice(self):
        rng = np.random.default_rng(105)
        for _ in range(50):
            shape = (int(rng.integers(1, 12)), int(rng.integers(1, 12)))
            prob = (rng.random(shape) < 0.5).astype(np.float64)
            gt = (rng.random(shape) < 0.5).astype(np.uint8)
            soft = metrics.soft_dice_loss(prob, gt, smooth=1e-12)
            hard = 1.0 - metrics.dice(metrics.binarize(prob), gt)
            assert soft == pytest.approx(hard, abs=1e-9)

    def test_loss_decreases_toward_ground_truth(self):
        rng = np.random.default_rng(106)
        config = metrics.LossConfig(beta=0.5, smooth=1e-6)
        for _ in range(30):
            shape = (int(rng.integers(2, 16)), int(rng.integers(2, 16)))
            gt = (rng.random(shape) < 0.5).astype(np.uint8)
            prob = np.clip(rng.random(shape), 0.05, 0.95)
            closer = prob + 0.5 * (gt - prob)
            before = metrics.combined_loss(prob, gt, config)
            after = metrics.combined_loss(closer, gt, config)
            assert after < before - 1e-12

    def test_config_validation(self):
        with pytest.raises(ValueError, match="beta"):
            metrics.LossConfig(beta=1.5)
        with pytest.raises(ValueError, match="smooth"):
            metrics.LossConfig(smooth=0.0)

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError, match="shape"):
            metrics.combined_loss(np.zeros((2, 2)), np.zeros((3, 3), dtype=np.uint8))
