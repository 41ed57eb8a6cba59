"""Class activation grids, pooled classification, rating labels, and the
weighted cross-entropy, checked against scalar-loop oracles."""

import math

import numpy as np
import pytest

from semcrop.aesthetics import (
    AvaRating,
    ClassifierHead,
    FeatureStack,
    LossParams,
    aesthetic_map,
    ava_label,
    class_activation_map,
    gap_classify,
    gap_logit,
    read_ava_ratings,
    read_classifier_head,
    read_feature_stack,
    weighted_cross_entropy,
    write_classifier_head,
    write_feature_stack,
)
from semcrop.errors import DegenerateMapError, InvalidInputError, LossDomainError


def two_class_head(high, low):
    return ClassifierHead(("high", "low"), np.array([high, low], dtype=float))


def scalar_cam(fs: FeatureStack, weights) -> np.ndarray:
    """Loop-based oracle for the weighted feature sum."""
    out = np.zeros((fs.grid_h, fs.grid_w))
    for y in range(fs.grid_h):
        for x in range(fs.grid_w):
            out[y, x] = sum(w * fs.values[l, y, x] for l, w in enumerate(weights))
    return out


class TestClassActivationMap:
    def test_single_constant_map(self):
        fs = FeatureStack(np.full((1, 3, 3), 0.7))
        head = two_class_head([1.0], [0.0])
        out = class_activation_map(fs, head, "high")
        np.testing.assert_allclose(out.values, 0.7)

    def test_two_map_hand_example(self):
        f1 = [[1.0, 0.0], [0.0, 1.0]]
        f2 = [[0.0, 2.0], [2.0, 0.0]]
        fs = FeatureStack(np.array([f1, f2]))
        head = two_class_head([1.0, 1.0], [0.0, 0.0])
        out = class_activation_map(fs, head, "high")
        np.testing.assert_array_equal(out.values, [[1.0, 2.0], [2.0, 1.0]])
        np.testing.assert_allclose(out.values, scalar_cam(fs, [1.0, 1.0]))

    def test_zero_weights_zero_map(self):
        rng = np.random.default_rng(0)
        fs = FeatureStack(rng.normal(size=(4, 5, 6)))
        head = two_class_head([0.0] * 4, [1.0] * 4)
        out = class_activation_map(fs, head, "high")
        np.testing.assert_array_equal(out.values, 0.0)

    def test_length_mismatch_rejected(self):
        fs = FeatureStack(np.ones((3, 2, 2)))
        head = two_class_head([1.0, 1.0], [0.0, 0.0])
        with pytest.raises(InvalidInputError):
            class_activation_map(fs, head, "high")

    def test_unknown_class_rejected(self):
        fs = FeatureStack(np.ones((1, 2, 2)))
        head = two_class_head([1.0], [0.0])
        with pytest.raises(InvalidInputError):
            class_activation_map(fs, head, "medium")

    def test_mean_equals_gap_logit(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            count = int(rng.integers(1, 9))
            h, w = rng.integers(1, 17, size=2)
            fs = FeatureStack(rng.normal(size=(count, h, w)))
            head = ClassifierHead(("high", "low"), rng.normal(size=(2, count)))
            for label in ("high", "low"):
                raw = class_activation_map(fs, head, label)
                assert raw.values.mean() == pytest.approx(
                    gap_logit(fs, head, label), abs=1e-9
                )

    def test_linear_in_head_weights(self):
        rng = np.random.default_rng(1)
        fs = FeatureStack(rng.normal(size=(3, 4, 4)))
        w1 = rng.normal(size=3)
        w2 = rng.normal(size=3)
        cam1 = class_activation_map(fs, two_class_head(w1, [0] * 3), "high").values
        cam2 = class_activation_map(fs, two_class_head(w2, [0] * 3), "high").values
        combined = class_activation_map(fs, two_class_head(w1 + 2 * w2, [0] * 3), "high").values
        np.testing.assert_allclose(combined, cam1 + 2 * cam2, atol=1e-12)


class TestAestheticMap:
    def test_minmax_of_hand_example(self):
        fs = FeatureStack(np.array([[[1.0, 0.0], [0.0, 1.0]], [[0.0, 2.0], [2.0, 0.0]]]))
        head = two_class_head([1.0, 1.0], [0.0, 0.0])
        out = aesthetic_map(fs, head, 2, 2)
        np.testing.assert_array_equal(out.values, [[0.0, 1.0], [1.0, 0.0]])

    def test_all_negative_grid_rejected(self):
        fs = FeatureStack(np.full((1, 3, 3), -2.0))
        head = two_class_head([1.0], [0.0])
        with pytest.raises(DegenerateMapError):
            aesthetic_map(fs, head, 3, 3)

    def test_output_range_and_resize(self):
        rng = np.random.default_rng(8)
        fs = FeatureStack(rng.normal(size=(5, 6, 6)))
        head = ClassifierHead(("high", "low"), rng.normal(size=(2, 5)))
        out = aesthetic_map(fs, head, 48, 36)
        assert (out.width, out.height) == (48, 36)
        assert out.values.min() >= 0.0
        assert out.values.max() <= 1.0

    def test_identity_resize_keeps_values(self):
        rng = np.random.default_rng(12)
        fs = FeatureStack(rng.normal(size=(4, 7, 9)))
        head = ClassifierHead(("high", "low"), rng.normal(size=(2, 4)))
        out = aesthetic_map(fs, head, 9, 7)
        raw = np.maximum(class_activation_map(fs, head, "high").values, 0.0)
        expected = (raw - raw.min()) / (raw.max() - raw.min())
        np.testing.assert_allclose(out.values, expected, atol=1e-12)


class TestGapClassify:
    def test_equal_logits_give_half(self):
        fs = FeatureStack(np.ones((2, 3, 3)))
        head = two_class_head([0.5, 0.5], [0.5, 0.5])
        np.testing.assert_allclose(gap_classify(fs, head), [0.5, 0.5])

    def test_scalar_softmax_oracle(self):
        # means 0.5 and 1.0, high weights (1, 1), low weights (0, 0)
        fs = FeatureStack(np.stack([np.full((2, 2), 0.5), np.full((2, 2), 1.0)]))
        head = two_class_head([1.0, 1.0], [0.0, 0.0])
        probs = gap_classify(fs, head)
        e_high, e_low = math.exp(1.5), math.exp(0.0)
        np.testing.assert_allclose(
            probs, [e_high / (e_high + e_low), e_low / (e_high + e_low)], atol=1e-12
        )
        assert probs[0] == pytest.approx(0.8176, abs=5e-5)
        assert probs[1] == pytest.approx(0.1824, abs=5e-5)

    def test_probabilities_sum_to_one(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            fs = FeatureStack(rng.normal(size=(3, 4, 5)))
            head = ClassifierHead(("high", "low"), rng.normal(scale=5, size=(2, 3)))
            assert gap_classify(fs, head).sum() == pytest.approx(1.0, abs=1e-9)

    def test_stable_for_large_logits(self):
        fs = FeatureStack(np.full((1, 2, 2), 1000.0))
        head = two_class_head([1.0], [0.9])
        probs = gap_classify(fs, head)
        assert np.all(np.isfinite(probs))
        assert probs.sum() == pytest.approx(1.0)


class TestAvaLabel:
    @pytest.mark.parametrize(
        "rating,expected",
        [(7.2, "high"), (3.9, "low"), (5.5, "ignored"), (7.0, "high"), (4.0, "low"),
         (10.0, "high"), (1.0, "low"), (6.99, "ignored"), (4.01, "ignored")],
    )
    def test_thresholds(self, rating, expected):
        assert ava_label(AvaRating("img", rating)) == expected

    def test_out_of_scale_rejected(self):
        with pytest.raises(InvalidInputError):
            AvaRating("img", 0.5)
        with pytest.raises(InvalidInputError):
            AvaRating("img", 10.5)

    def test_partition_of_the_scale(self):
        grid = np.linspace(1.0, 10.0, 1801)
        labels = [ava_label(AvaRating("x", float(r))) for r in grid]
        assert {"high", "low", "ignored"} == set(labels)
        # three contiguous runs with boundaries at 4 and 7 inclusive
        transitions = [
            (grid[i], labels[i - 1], labels[i])
            for i in range(1, len(grid))
            if labels[i] != labels[i - 1]
        ]
        assert len(transitions) == 2
        assert transitions[0][1:] == ("low", "ignored")
        assert transitions[1][1:] == ("ignored", "high")
        assert ava_label(AvaRating("x", 4.0)) == "low"
        assert ava_label(AvaRating("x", 7.0)) == "high"


class TestWeightedCrossEntropy:
    def test_perfect_prediction_is_zero(self):
        truth = np.array([[1.0, 0.0], [0.0, 1.0]])
        assert weighted_cross_entropy(truth, truth, LossParams((1.0, 1.0))) == 0.0

    def test_weighted_single_sample(self):
        # low-quality class weighted 3x, predicted probability one half
        truth = np.array([[0.0, 1.0]])
        pred = np.array([[0.5, 0.5]])
        loss = weighted_cross_entropy(truth, pred, LossParams((1.0, 3.0)))
        assert loss == pytest.approx(3.0 * math.log(2.0), abs=1e-9)
        assert loss == pytest.approx(2.07944, abs=1e-5)

    def test_linear_in_weights(self):
        rng = np.random.default_rng(6)
        pred = rng.dirichlet(np.ones(3), size=8)
        truth = np.eye(3)[rng.integers(0, 3, size=8)]
        base = weighted_cross_entropy(truth, pred, LossParams((1.0, 2.0, 0.5)))
        doubled = weighted_cross_entropy(truth, pred, LossParams((2.0, 4.0, 1.0)))
        assert doubled == pytest.approx(2.0 * base, rel=1e-12)

    def test_unit_weights_equal_plain_cross_entropy(self):
        rng = np.random.default_rng(10)
        pred = rng.dirichlet(np.ones(2), size=16)
        truth = np.eye(2)[rng.integers(0, 2, size=16)]
        got = weighted_cross_entropy(truth, pred, LossParams((1.0, 1.0)))
        plain = -np.mean(np.log(pred[truth == 1.0]))
        assert got == pytest.approx(plain, rel=1e-12)

    def test_zero_probability_at_true_class(self):
        truth = np.array([[1.0, 0.0]])
        pred = np.array([[0.0, 1.0]])
        with pytest.raises(LossDomainError):
            weighted_cross_entropy(truth, pred, LossParams((1.0, 1.0)))

    def test_bad_rows_rejected(self):
        params = LossParams((1.0, 1.0))
        with pytest.raises(InvalidInputError):
            weighted_cross_entropy(np.array([[1.0, 0.0]]), np.array([[0.6, 0.6]]), params)
        with pytest.raises(InvalidInputError):
            weighted_cross_entropy(np.array([[0.5, 0.5]]), np.array([[0.5, 0.5]]), params)

    def test_non_positive_class_weight_rejected(self):
        with pytest.raises(InvalidInputError):
            LossParams((1.0, 0.0))


class TestFileFormats:
    def test_feature_stack_round_trip(self, tmp_path):
        rng = np.random.default_rng(19)
        fs = FeatureStack(rng.normal(size=(3, 4, 5)).astype(np.float32).astype(np.float64))
        path = tmp_path / "img.fst"
        write_feature_stack(fs, path)
        back = read_feature_stack(path)
        np.testing.assert_array_equal(back.values, fs.values)
        raw = path.read_bytes()
        assert raw[:4] == b"FST1"
        assert len(raw) == 16 + 4 * 3 * 4 * 5

    def test_head_round_trip(self, tmp_path):
        head = ClassifierHead(("high", "low"), np.array([[1.5, -0.25], [0.0, 2.0]]))
        path = tmp_path / "img.head"
        write_classifier_head(head, path)
        back = read_classifier_head(path)
        assert back.classes == ("high", "low")
        np.testing.assert_array_equal(back.weights, head.weights)

    def test_corrupt_files_rejected(self, tmp_path):
        bad = tmp_path / "bad"
        bad.write_bytes(b"JUNKJUNKJUNKJUNK")
        with pytest.raises(InvalidInputError):
            read_feature_stack(bad)
        with pytest.raises(InvalidInputError):
            read_classifier_head(bad)

    def test_truncated_head_rejected(self, tmp_path):
        head = ClassifierHead(("high", "low"), np.ones((2, 3)))
        path = tmp_path / "h.head"
        write_classifier_head(head, path)
        path.write_bytes(path.read_bytes()[:-2])
        with pytest.raises(InvalidInputError):
            read_classifier_head(path)

    def test_ava_ratings_text(self, tmp_path):
        path = tmp_path / "ratings.txt"
        path.write_text("# id rating\nimg1, 7.25\nimg2 3.5\n\nimg3,5.0\n")
        ratings = read_ava_ratings(path)
        assert [(r.image_id, r.mean_rating) for r in ratings] == [
            ("img1", 7.25), ("img2", 3.5), ("img3", 5.0)
        ]
        bad = tmp_path / "bad.txt"
        bad.write_text("img1 high\n")
        with pytest.raises(InvalidInputError):
            read_ava_ratings(bad)
