"""Score-map kernels against naive oracles: direct convolution, closed-form
bilinear weights, and double-loop window sums."""

import math

import numpy as np
import pytest

from semcrop.errors import DegenerateMapError, InvalidInputError
from semcrop.geometry import Rect
from semcrop.maps import (
    ScoreMap,
    gaussian_smooth,
    integral,
    normalize,
    read_map,
    resize_bilinear,
    window_sum,
    write_map,
)


def naive_gaussian_smooth(values: np.ndarray, sigma: float) -> np.ndarray:
    """O(n^2 k^2) reference: 2-D kernel, per-pixel edge renormalization,
    then an exact global mass correction. Entirely loop-based."""
    radius = max(1, math.ceil(3.0 * sigma))
    size = 2 * radius + 1
    kernel = np.empty((size, size))
    for dy in range(-radius, radius + 1):
        for dx in range(-radius, radius + 1):
            kernel[dy + radius, dx + radius] = math.exp(-0.5 * (dx * dx + dy * dy) / sigma**2)
    kernel /= kernel.sum()

    h, w = values.shape
    out = np.zeros_like(values)
    for y in range(h):
        for x in range(w):
            acc = 0.0
            weight = 0.0
            for dy in range(-radius, radius + 1):
                for dx in range(-radius, radius + 1):
                    sy, sx = y + dy, x + dx
                    if 0 <= sy < h and 0 <= sx < w:
                        k = kernel[dy + radius, dx + radius]
                        acc += k * values[sy, sx]
                        weight += k
            out[y, x] = acc / weight
    total_out = out.sum()
    if total_out != 0.0:
        out *= values.sum() / total_out
    return out


class TestScoreMap:
    def test_rejects_non_finite(self):
        with pytest.raises(InvalidInputError):
            ScoreMap(np.array([[1.0, np.nan]]))
        with pytest.raises(InvalidInputError):
            ScoreMap(np.array([[np.inf]]))

    def test_rejects_empty_and_wrong_rank(self):
        with pytest.raises(InvalidInputError):
            ScoreMap(np.zeros((0, 4)))
        with pytest.raises(InvalidInputError):
            ScoreMap(np.zeros(4))

    def test_immutable(self):
        m = ScoreMap(np.ones((2, 2)))
        with pytest.raises(ValueError):
            m.values[0, 0] = 5.0


class TestGaussianSmooth:
    def test_zero_map_stays_zero(self):
        m = ScoreMap(np.zeros((6, 9)))
        out = gaussian_smooth(m, 2.0)
        assert np.all(out.values == 0.0)

    def test_uniform_map_unchanged(self):
        for sigma in (0.7, 1.0, 3.5):
            m = ScoreMap(np.full((7, 5), 0.42))
            out = gaussian_smooth(m, sigma)
            np.testing.assert_allclose(out.values, 0.42, atol=1e-9)

    def test_single_peak_matches_naive_convolution(self):
        values = np.zeros((5, 5))
        values[2, 2] = 1.0
        out = gaussian_smooth(ScoreMap(values), 1.0)
        expected = naive_gaussian_smooth(values, 1.0)
        np.testing.assert_allclose(out.values, expected, rtol=1e-9, atol=1e-12)

    def test_random_maps_match_naive_convolution(self):
        rng = np.random.default_rng(11)
        for sigma in (0.6, 1.3, 2.0):
            values = rng.uniform(0, 3, size=(9, 12))
            out = gaussian_smooth(ScoreMap(values), sigma)
            expected = naive_gaussian_smooth(values, sigma)
            np.testing.assert_allclose(out.values, expected, rtol=1e-9, atol=1e-12)

    def test_mass_preserved_on_random_maps(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            h, w = rng.integers(3, 40, size=2)
            values = rng.uniform(0, 5, size=(h, w))
            sigma = float(rng.uniform(0.5, 6.0))
            out = gaussian_smooth(ScoreMap(values), sigma)
            assert out.total == pytest.approx(values.sum(), rel=1e-6)

    def test_max_does_not_increase(self):
        rng = np.random.default_rng(5)
        for _ in range(20):
            values = rng.uniform(0, 1, size=(16, 16))
            sigma = float(rng.uniform(0.5, 4.0))
            out = gaussian_smooth(ScoreMap(values), sigma)
            assert out.values.max() <= values.max() * (1 + 1e-9)

    def test_non_positive_sigma_rejected(self):
        m = ScoreMap(np.ones((3, 3)))
        with pytest.raises(InvalidInputError):
            gaussian_smooth(m, 0.0)
        with pytest.raises(InvalidInputError):
            gaussian_smooth(m, -1.5)


class TestResizeBilinear:
    def test_constant_stays_constant(self):
        m = ScoreMap(np.full((2, 2), 0.5))
        for out_w, out_h in ((7, 3), (1, 1), (16, 16)):
            out = resize_bilinear(m, out_w, out_h)
            assert out.values.shape == (out_h, out_w)
            np.testing.assert_array_equal(out.values, 0.5)

    def test_one_pixel_broadcast(self):
        out = resize_bilinear(ScoreMap(np.array([[0.7]])), 5, 5)
        np.testing.assert_array_equal(out.values, 0.7)

    def test_two_to_four_closed_form(self):
        # Half-pixel sample centers: out pixel i samples (i + 0.5) / 2 - 0.5,
        # clamped at the borders. Weights computed here by hand.
        out = resize_bilinear(ScoreMap(np.array([[0.0, 1.0]])), 4, 1)
        np.testing.assert_allclose(out.values[0], [0.0, 0.25, 0.75, 1.0], atol=1e-12)

    def test_output_within_input_range(self):
        rng = np.random.default_rng(23)
        for _ in range(25):
            h, w = rng.integers(1, 20, size=2)
            values = rng.uniform(-2, 7, size=(h, w))
            out_w, out_h = rng.integers(1, 50, size=2)
            out = resize_bilinear(ScoreMap(values), int(out_w), int(out_h))
            assert out.values.min() >= values.min()
            assert out.values.max() <= values.max()

    def test_bad_target_rejected(self):
        with pytest.raises(InvalidInputError):
            resize_bilinear(ScoreMap(np.ones((2, 2))), 0, 4)


class TestNormalize:
    def test_max_one(self):
        out = normalize(ScoreMap(np.array([[1.0, 3.0]])), "max_one")
        np.testing.assert_allclose(out.values, [[1 / 3, 1.0]])
        assert out.values.max() == 1.0

    def test_sum_one(self):
        out = normalize(ScoreMap(np.array([[1.0, 3.0]])), "sum_one")
        np.testing.assert_allclose(out.values, [[0.25, 0.75]])
        assert out.total == pytest.approx(1.0, abs=1e-9)

    def test_minmax(self):
        out = normalize(ScoreMap(np.array([[2.0, 4.0]])), "minmax")
        np.testing.assert_array_equal(out.values, [[0.0, 1.0]])

    def test_degenerate_inputs(self):
        zero = ScoreMap(np.zeros((2, 2)))
        with pytest.raises(DegenerateMapError):
            normalize(zero, "max_one")
        with pytest.raises(DegenerateMapError):
            normalize(zero, "sum_one")
        with pytest.raises(DegenerateMapError):
            normalize(ScoreMap(np.full((2, 2), 3.0)), "minmax")

    def test_unknown_mode(self):
        with pytest.raises(InvalidInputError):
            normalize(ScoreMap(np.ones((2, 2))), "nope")


def naive_window_sum(values: np.ndarray, q: Rect) -> float:
    acc = 0.0
    for y in range(q.y, q.bottom):
        for x in range(q.x, q.right):
            acc += values[y, x]
    return acc


class TestIntegral:
    def test_uniform_window(self):
        m = ScoreMap(np.ones((5, 6)))
        table = integral(m)
        assert window_sum(table, Rect(1, 1, 4, 3)) == pytest.approx(12.0)

    def test_full_map_is_total(self):
        rng = np.random.default_rng(2)
        values = rng.uniform(0, 1, size=(8, 9))
        m = ScoreMap(values)
        table = integral(m)
        assert window_sum(table, Rect(0, 0, 9, 8)) == pytest.approx(values.sum(), rel=1e-12)

    def test_against_naive_double_loop(self):
        rng = np.random.default_rng(17)
        values = rng.uniform(0, 1, size=(24, 31))
        table = integral(ScoreMap(values))
        for _ in range(100):
            w = int(rng.integers(1, 31))
            h = int(rng.integers(1, 24))
            x = int(rng.integers(0, 31 - w + 1))
            y = int(rng.integers(0, 24 - h + 1))
            q = Rect(x, y, w, h)
            assert window_sum(table, q) == pytest.approx(
                naive_window_sum(values, q), rel=1e-6, abs=1e-12
            )

    def test_monotone_along_axes(self):
        rng = np.random.default_rng(4)
        table = integral(ScoreMap(rng.uniform(0, 1, size=(10, 10))))
        assert np.all(np.diff(table.sums, axis=0) >= 0)
        assert np.all(np.diff(table.sums, axis=1) >= 0)
        assert np.all(table.sums[0, :] == 0)
        assert np.all(table.sums[:, 0] == 0)

    def test_out_of_bounds_window_rejected(self):
        table = integral(ScoreMap(np.ones((4, 4))))
        with pytest.raises(InvalidInputError):
            window_sum(table, Rect(2, 2, 4, 4))


class TestMapFile:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(9)
        values = rng.uniform(0, 1, size=(13, 7)).astype(np.float32).astype(np.float64)
        m = ScoreMap(values)
        path = tmp_path / "m.amap"
        write_map(m, path)
        back = read_map(path)
        np.testing.assert_array_equal(back.values, values)
        # writing again produces identical bytes
        path2 = tmp_path / "m2.amap"
        write_map(back, path2)
        assert path.read_bytes() == path2.read_bytes()

    def test_header_layout(self, tmp_path):
        path = tmp_path / "m.amap"
        write_map(ScoreMap(np.array([[1.0, 2.0]])), path)
        raw = path.read_bytes()
        assert raw[:4] == b"MAP1"
        assert raw[4:8] == (2).to_bytes(4, "little")
        assert raw[8:12] == (1).to_bytes(4, "little")
        assert len(raw) == 12 + 2 * 4

    def test_rejects_bad_magic(self, tmp_path):
        path = tmp_path / "bad.amap"
        path.write_bytes(b"NOPE" + bytes(8))
        with pytest.raises(InvalidInputError):
            read_map(path)

    def test_rejects_truncation(self, tmp_path):
        path = tmp_path / "m.amap"
        write_map(ScoreMap(np.ones((4, 4))), path)
        path.write_bytes(path.read_bytes()[:-3])
        with pytest.raises(InvalidInputError):
            read_map(path)

    def test_rejects_non_finite_payload(self, tmp_path):
        import struct

        path = tmp_path / "m.amap"
        payload = struct.pack("<4f", 1.0, float("nan"), 0.5, 0.25)
        path.write_bytes(b"MAP1" + struct.pack("<II", 2, 2) + payload)
        with pytest.raises(InvalidInputError):
            read_map(path)
