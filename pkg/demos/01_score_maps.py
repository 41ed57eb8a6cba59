"""Score maps: the dense grids everything else is built on.

A ScoreMap is a 2-D grid of per-pixel scores. This walkthrough covers the four
kernels the cropping engine relies on: Gaussian smoothing (mass-preserving,
no dark borders), bilinear resizing, normalization conventions, and integral
images for constant-time window sums. It ends with the MAP1 file format used
to exchange maps with external tools.
"""

import tempfile
from pathlib import Path

import numpy as np

from semcrop import (
    Rect,
    ScoreMap,
    gaussian_smooth,
    integral,
    normalize,
    read_map,
    resize_bilinear,
    window_sum,
    write_map,
)

# -- 1. Build a map with a hot spot ------------------------------------------

values = np.zeros((48, 64))
values[18:30, 40:56] = 1.0
m = ScoreMap(values)
print(f"map {m.width}x{m.height}, total mass {m.total:.1f}")

# -- 2. Gaussian smoothing preserves mass ------------------------------------

smoothed = gaussian_smooth(m, sigma=3.0)
print(f"after smoothing: total mass {smoothed.total:.6f} (unchanged)")
print(f"peak dropped from {m.values.max():.2f} to {smoothed.values.max():.3f}")

# -- 3. Normalization conventions --------------------------------------------

peak_one = normalize(smoothed, "max_one")   # peak exactly 1, used before fusion
unit_mass = normalize(smoothed, "sum_one")  # sums to 1, a probability surface
print(f"max_one peak: {peak_one.values.max()}, sum_one total: {unit_mass.total:.9f}")

# -- 4. Resizing between grid resolutions ------------------------------------

# Feature-resolution grids get upsampled to image resolution this way.
small = ScoreMap(np.array([[0.0, 1.0], [1.0, 0.0]]))
big = resize_bilinear(small, 8, 8)
print(f"2x2 grid resized to {big.width}x{big.height}; "
      f"range stays within [{big.values.min():.2f}, {big.values.max():.2f}]")

# -- 5. Integral image: any window sum from four lookups ----------------------

table = integral(peak_one)
window = Rect(36, 14, 24, 20)
fast = window_sum(table, window)
naive = peak_one.values[window.y : window.bottom, window.x : window.right].sum()
print(f"window mass {fast:.6f} (naive summation agrees: {naive:.6f})")

# -- 6. MAP1 files round-trip bit-exactly -------------------------------------

with tempfile.TemporaryDirectory() as tmp:
    path = Path(tmp) / "demo.amap"
    write_map(peak_one, path)
    back = read_map(path)
    print(f"MAP1 file: {path.stat().st_size} bytes, "
          f"round-trip exact: {np.array_equal(back.values, ScoreMap(peak_one.values.astype(np.float32)).values)}")
