"""Map fusion, sliding-window candidate generation, scoring, and ranking.

The cropping engine fuses the aesthetic and semantic maps linearly, enumerates
candidate windows of the requested aspect ratio over a scale ladder, scores
each window by its share of the fused map's total mass (an integral image
makes every window O(1)), and returns the top windows in a deterministic
order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DegenerateMapError, InvalidInputError
from .geometry import AspectRatio, Rect
from .maps import IntegralMap, ScoreMap, integral, normalize, window_sum

DEFAULT_SCALE_FRACTIONS = (0.5, 0.6, 0.7, 0.8, 0.9, 1.0)


@dataclass(frozen=True)
class CombineWeights:
    """Relative importance of the aesthetic and semantic maps in the fusion."""

    aesthetic: float
    semantic: float

    def __post_init__(self):
        if self.aesthetic < 0 or self.semantic < 0:
            raise InvalidInputError("combine weights must be non-negative")
        if self.aesthetic + self.semantic <= 0:
            raise InvalidInputError("at least one combine weight must be positive")


@dataclass(frozen=True)
class CandidateConfig:
    """Sliding-window settings: aspect ratio, stride, and size ladder.

    ``scale_fractions`` are fractions of the largest window of the requested
    ratio that fits the image; each fraction contributes one window size.
    """

    aspect: AspectRatio
    stride: int
    scale_fractions: tuple[float, ...] = DEFAULT_SCALE_FRACTIONS

    def __post_init__(self):
        if self.stride < 1:
            raise InvalidInputError(f"stride must be at least 1 px, got {self.stride}")
        fractions = tuple(float(f) for f in self.scale_fractions)
        if not fractions:
            raise InvalidInputError("scale fractions must be non-empty")
        if any(not 0.0 < f <= 1.0 for f in fractions):
            raise InvalidInputError(f"scale fractions must lie in (0, 1], got {fractions}")
        if list(fractions) != sorted(fractions):
            raise InvalidInputError("scale fractions must be sorted ascending")
        object.__setattr__(self, "scale_fractions", fractions)


def default_stride(img_w: int, img_h: int) -> int:
    """Default inter-window spacing: a fortieth of the longer image side."""
    return max(1, max(img_w, img_h) // 40)


def default_candidate_config(img_w: int, img_h: int, aspect: AspectRatio) -> CandidateConfig:
    return CandidateConfig(aspect, default_stride(img_w, img_h))


@dataclass(frozen=True)
class RankedCrop:
    """A candidate window with its share of the fused map's mass."""

    rect: Rect
    score: float

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise InvalidInputError(f"crop score must be in [0, 1], got {self.score}")


def combine(a: ScoreMap, s: ScoreMap | None, w: CombineWeights) -> ScoreMap:
    """Weighted pointwise sum of the two maps.

    Both maps are first normalized to peak 1 so the weights compare like
    ranges; a zero weight skips its map entirely (and an absent semantic map
    contributes nothing). Dimension mismatches are an error.
    """
    if s is not None and (s.width, s.height) != (a.width, a.height):
        raise InvalidInputError(
            f"map dimensions differ: {a.width}x{a.height} vs {s.width}x{s.height}"
        )
    out = np.zeros(a.values.shape, dtype=np.float64)
    if w.aesthetic > 0:
        out += w.aesthetic * normalize(a, "max_one").values
    if w.semantic > 0 and s is not None:
        out += w.semantic * normalize(s, "max_one").values
    return ScoreMap(out)


def _window_positions(span: int, window: int, stride: int) -> list[int]:
    """Offsets 0, stride, 2*stride, ... plus the far-edge-flush position."""
    last = span - window
    positions = list(range(0, last + 1, stride))
    if positions[-1] != last:
        positions.append(last)
    return positions


def candidates(img_w: int, img_h: int, cfg: CandidateConfig) -> list[Rect]:
    """All windows of the requested ratio over the scale ladder.

    Window sizes are integer multiples of the reduced ratio, so the aspect is
    always exact. Each scale enumerates positions at the configured stride in
    both axes, always including the right- and bottom-flush rows so the image
    border is reachable. Returns an empty list when no window fits.
    """
    if img_w <= 0 or img_h <= 0:
        raise InvalidInputError(f"image size must be positive, got {img_w}x{img_h}")
    num, den = cfg.aspect.num, cfg.aspect.den
    max_units = min(img_w // num, img_h // den)
    if max_units < 1:
        return []

    sizes: list[tuple[int, int]] = []
    seen_units = set()
    for fraction in cfg.scale_fractions:
        units = int(fraction * max_units)
        if units < 1 or units in seen_units:
            continue
        seen_units.add(units)
        sizes.append((units * num, units * den))

    rects: list[Rect] = []
    for w, h in sizes:
        for y in _window_positions(img_h, h, cfg.stride):
            for x in _window_positions(img_w, w, cfg.stride):
                rects.append(Rect(x, y, w, h))
    return rects


def score_crop(c: ScoreMap, q: Rect) -> float:
    """Fraction of the map's total mass inside ``q``.

    The full-image window scores exactly 1; a window holding all the mass
    scores 1 regardless of its size. Requires a non-negative map with positive
    total mass.
    """
    table = integral(c)
    return _score_window(c, table, q)


def _score_window(c: ScoreMap, table: IntegralMap, q: Rect) -> float:
    if np.any(c.values < 0):
        raise InvalidInputError("crop scoring needs a non-negative map")
    total = table.total
    if total <= 0:
        raise DegenerateMapError("combined map has zero total mass, nothing to score")
    return min(window_sum(table, q) / total, 1.0)


def rank_candidates(c: ScoreMap, cfg: CandidateConfig, n: int = 1) -> list[RankedCrop]:
    """Score every candidate window on ``c`` and keep the best ``n``.

    Ordering is fully deterministic: descending score, then larger area, then
    smaller y, then smaller x. Scaling the map by any positive constant leaves
    the returned windows unchanged (the score is a mass ratio).
    """
    if n < 1:
        raise InvalidInputError(f"crop count must be at least 1, got {n}")
    if np.any(c.values < 0):
        raise InvalidInputError("crop ranking needs a non-negative map")
    rects = candidates(c.width, c.height, cfg)
    if not rects:
        return []
    table = integral(c)
    total = table.total
    if total <= 0:
        raise DegenerateMapError("combined map has zero total mass, nothing to rank")
    scored = [(window_sum(table, r) / total, r) for r in rects]
    scored.sort(key=lambda item: (-item[0], -item[1].area, item[1].y, item[1].x))
    return [RankedCrop(r, min(score, 1.0)) for score, r in scored[:n]]


def best_crops(
    a: ScoreMap,
    s: ScoreMap | None,
    w: CombineWeights,
    cfg: CandidateConfig,
    n: int = 1,
) -> list[RankedCrop]:
    """Fuse the maps and return the top ``n`` candidate croppings."""
    return rank_candidates(combine(a, s, w), cfg, n)
