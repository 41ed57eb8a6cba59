"""Dense score grids and their numeric kernels.

A :class:`ScoreMap` is the common currency of the engine: per-pixel aesthetic
scores, per-pixel relevance scores, and their weighted fusion are all score
maps. This module provides the kernels those maps need (Gaussian smoothing,
bilinear resizing, normalization, integral images for O(1) window sums) and
the MAP1 binary file format used to exchange maps with external tools.

MAP1 format (all little-endian): magic bytes ``MAP1``, uint32 width, uint32
height, then ``width * height`` IEEE-754 float32 values, row-major with the
top row first. The reader rejects non-finite values.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from scipy.ndimage import correlate1d

from .errors import DegenerateMapError, InvalidInputError
from .geometry import Rect

MAP_MAGIC = b"MAP1"

NormalizeMode = Literal["max_one", "sum_one", "minmax"]


@dataclass(frozen=True)
class ScoreMap:
    """2-D grid of finite per-pixel scores, row-major, top row first.

    Maps produced by the engine (aesthetic, semantic, combined) are
    non-negative; raw class-activation grids may carry negative values until
    they are clamped and normalized, so only finiteness is enforced here.
    The backing array is frozen so maps can be shared across threads.
    """

    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 2 or arr.size == 0:
            raise InvalidInputError(f"score map must be a non-empty 2-D grid, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("score map values must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def total(self) -> float:
        return float(self.values.sum())

    @classmethod
    def constant(cls, width: int, height: int, value: float = 0.0) -> "ScoreMap":
        if width <= 0 or height <= 0:
            raise InvalidInputError(f"map size must be positive, got {width}x{height}")
        return cls(np.full((height, width), value, dtype=np.float64))


@dataclass(frozen=True)
class IntegralMap:
    """Summed-area table of a score map.

    ``sums[r, c]`` holds the sum of all map values above and left of pixel
    (c, r), so the table is one row and one column larger than the map and its
    first row and column are zero. Window sums come out of four lookups.
    """

    sums: np.ndarray

    @property
    def width(self) -> int:
        return self.sums.shape[1] - 1

    @property
    def height(self) -> int:
        return self.sums.shape[0] - 1

    @property
    def total(self) -> float:
        return float(self.sums[-1, -1])


def integral(m: ScoreMap) -> IntegralMap:
    """Build the summed-area table for ``m``."""
    sums = np.zeros((m.height + 1, m.width + 1), dtype=np.float64)
    np.cumsum(m.values, axis=0, out=sums[1:, 1:])
    np.cumsum(sums[1:, 1:], axis=1, out=sums[1:, 1:])
    sums.flags.writeable = False
    return IntegralMap(sums)


def window_sum(i: IntegralMap, q: Rect) -> float:
    """Sum of map values inside ``q``, computed from four table lookups."""
    if not q.within(i.width, i.height):
        raise InvalidInputError(
            f"window {q} lies outside the {i.width}x{i.height} map bounds"
        )
    s = i.sums
    return float(s[q.bottom, q.right] - s[q.y, q.right] - s[q.bottom, q.x] + s[q.y, q.x])


def _gaussian_kernel(sigma: float) -> np.ndarray:
    """1-D Gaussian taps truncated at 3 sigma and normalized to sum 1."""
    radius = max(1, int(math.ceil(3.0 * sigma)))
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-0.5 * (xs / sigma) ** 2)
    return k / k.sum()


def gaussian_smooth(m: ScoreMap, sigma: float) -> ScoreMap:
    """Blur with a truncated Gaussian kernel, preserving total mass.

    The kernel is separable and cut off at 3 sigma. Near the borders the
    in-bounds taps are renormalized per pixel (no dark frame from implicit
    zeros); a final global rescale pins the total sum to the input's exactly,
    since per-pixel renormalization alone conserves mass only approximately.
    """
    if sigma <= 0:
        raise InvalidInputError(f"sigma must be positive, got {sigma}")
    k = _gaussian_kernel(sigma)
    blurred = correlate1d(m.values, k, axis=0, mode="constant", cval=0.0)
    blurred = correlate1d(blurred, k, axis=1, mode="constant", cval=0.0)
    cover = correlate1d(np.ones(m.values.shape), k, axis=0, mode="constant", cval=0.0)
    cover = correlate1d(cover, k, axis=1, mode="constant", cval=0.0)
    out = blurred / cover
    total_in = m.values.sum()
    total_out = out.sum()
    if total_out != 0.0:
        out *= total_in / total_out
    return ScoreMap(out)


def resize_bilinear(m: ScoreMap, out_w: int, out_h: int) -> ScoreMap:
    """Resample to ``out_w x out_h`` with bilinear interpolation.

    Sample positions use half-pixel centers and clamp at the borders, so
    constant maps stay constant and outputs never leave the input's value
    range.
    """
    if out_w <= 0 or out_h <= 0:
        raise InvalidInputError(f"target size must be positive, got {out_w}x{out_h}")
    src = m.values
    in_h, in_w = src.shape
    if (out_w, out_h) == (in_w, in_h):
        return ScoreMap(src)

    xs = (np.arange(out_w, dtype=np.float64) + 0.5) * (in_w / out_w) - 0.5
    ys = (np.arange(out_h, dtype=np.float64) + 0.5) * (in_h / out_h) - 0.5
    x0 = np.floor(xs).astype(np.int64)
    y0 = np.floor(ys).astype(np.int64)
    fx = xs - x0
    fy = ys - y0
    x0i = np.clip(x0, 0, in_w - 1)
    x1i = np.clip(x0 + 1, 0, in_w - 1)
    y0i = np.clip(y0, 0, in_h - 1)
    y1i = np.clip(y0 + 1, 0, in_h - 1)

    top = src[y0i[:, None], x0i] * (1.0 - fx) + src[y0i[:, None], x1i] * fx
    bot = src[y1i[:, None], x0i] * (1.0 - fx) + src[y1i[:, None], x1i] * fx
    out = top * (1.0 - fy)[:, None] + bot * fy[:, None]
    # The blend is convex; clipping only guards against last-ulp rounding.
    np.clip(out, src.min(), src.max(), out=out)
    return ScoreMap(out)


def normalize(m: ScoreMap, mode: NormalizeMode) -> ScoreMap:
    """Rescale map values by the requested convention.

    ``max_one`` divides by the maximum (peak becomes exactly 1.0), ``sum_one``
    divides by the total so the map sums to 1, ``minmax`` maps the value range
    affinely onto [0, 1]. Maps without the needed spread raise
    :class:`DegenerateMapError`.
    """
    v = m.values
    if mode == "max_one":
        peak = v.max()
        if peak <= 0:
            raise DegenerateMapError("max_one normalization needs a strictly positive value")
        return ScoreMap(v / peak)
    if mode == "sum_one":
        total = v.sum()
        if total <= 0:
            raise DegenerateMapError("sum_one normalization needs positive total mass")
        return ScoreMap(v / total)
    if mode == "minmax":
        lo = v.min()
        hi = v.max()
        if hi <= lo:
            raise DegenerateMapError("minmax normalization needs a non-constant map")
        return ScoreMap((v - lo) / (hi - lo))
    raise InvalidInputError(f"unknown normalization mode {mode!r}")


def write_map(m: ScoreMap, path: str | Path) -> None:
    """Write ``m`` in the MAP1 binary format."""
    payload = m.values.astype("<f4").tobytes(order="C")
    with open(path, "wb") as fh:
        fh.write(MAP_MAGIC)
        fh.write(struct.pack("<II", m.width, m.height))
        fh.write(payload)


def read_map(path: str | Path) -> ScoreMap:
    """Read a MAP1 file. Rejects truncated files and non-finite values."""
    raw = Path(path).read_bytes()
    if len(raw) < 12 or raw[:4] != MAP_MAGIC:
        raise InvalidInputError(f"{path}: not a MAP1 file")
    width, height = struct.unpack_from("<II", raw, 4)
    expected = 12 + 4 * width * height
    if width == 0 or height == 0 or len(raw) != expected:
        raise InvalidInputError(
            f"{path}: bad MAP1 payload (header says {width}x{height}, file has {len(raw)} bytes)"
        )
    values = np.frombuffer(raw, dtype="<f4", count=width * height, offset=12)
    values = values.reshape(height, width).astype(np.float64)
    if not np.all(np.isfinite(values)):
        raise InvalidInputError(f"{path}: MAP1 payload contains non-finite values")
    return ScoreMap(values)
