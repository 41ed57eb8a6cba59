"""Integer pixel rectangles, aspect ratios, and the intersection-over-union metric.

Rectangles follow a half-open pixel convention: a rect covers the pixel grid
``[x, x + w) x [y, y + h)``, so its area is exactly the number of pixels inside
it and analytic results can be checked against pixel-counting.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import InvalidInputError


@dataclass(frozen=True, order=True)
class Rect:
    """Axis-aligned pixel rectangle: top-left corner plus positive size."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if not isinstance(v, int):
                raise InvalidInputError(f"rect field {name} must be an integer, got {v!r}")
        if self.w <= 0 or self.h <= 0:
            raise InvalidInputError(f"rect size must be positive, got {self.w}x{self.h}")

    @property
    def area(self) -> int:
        return self.w * self.h

    @property
    def right(self) -> int:
        """One past the rightmost pixel column."""
        return self.x + self.w

    @property
    def bottom(self) -> int:
        """One past the bottommost pixel row."""
        return self.y + self.h

    def contains(self, other: "Rect") -> bool:
        return (
            self.x <= other.x
            and self.y <= other.y
            and other.right <= self.right
            and other.bottom <= self.bottom
        )

    def within(self, width: int, height: int) -> bool:
        """True if the rect lies inside an image of the given size."""
        return self.x >= 0 and self.y >= 0 and self.right <= width and self.bottom <= height


@dataclass(frozen=True)
class AspectRatio:
    """Width:height ratio stored in lowest terms."""

    num: int
    den: int

    def __post_init__(self):
        if not isinstance(self.num, int) or not isinstance(self.den, int):
            raise InvalidInputError("aspect ratio terms must be integers")
        if self.num <= 0 or self.den <= 0:
            raise InvalidInputError(f"aspect ratio terms must be positive, got {self.num}:{self.den}")
        g = math.gcd(self.num, self.den)
        if g > 1:
            object.__setattr__(self, "num", self.num // g)
            object.__setattr__(self, "den", self.den // g)

    @classmethod
    def parse(cls, text: str) -> "AspectRatio":
        """Parse ``"N:D"`` notation, e.g. ``"1:1"`` or ``"16:9"``."""
        parts = text.split(":")
        if len(parts) != 2:
            raise InvalidInputError(f"aspect ratio must look like N:D, got {text!r}")
        try:
            num, den = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise InvalidInputError(f"aspect ratio must be integer N:D, got {text!r}") from exc
        return cls(num, den)

    def __str__(self) -> str:
        return f"{self.num}:{self.den}"


SQUARE = AspectRatio(1, 1)


def intersect(a: Rect, b: Rect) -> Rect | None:
    """Maximal rectangle contained in both, or ``None`` when they are disjoint."""
    x = max(a.x, b.x)
    y = max(a.y, b.y)
    right = min(a.right, b.right)
    bottom = min(a.bottom, b.bottom)
    if right <= x or bottom <= y:
        return None
    return Rect(x, y, right - x, bottom - y)


def iou(a: Rect, b: Rect) -> float:
    """Intersection area over union area, in [0, 1].

    Symmetric, 1.0 iff the rects are identical, 0.0 iff they are disjoint.
    ``Rect`` cannot represent a zero-area rectangle, so degenerate inputs are
    rejected at construction time rather than here.
    """
    inter = intersect(a, b)
    if inter is None:
        return 0.0
    inter_area = inter.area
    union_area = a.area + b.area - inter_area
    return inter_area / union_area


def matches_ratio(r: Rect, ar: AspectRatio, tol: int) -> bool:
    """True when the rect's sides fit the ratio within ``tol`` pixels.

    The comparison cross-multiplies to stay in integers:
    ``|w * den - h * num| <= tol * max(num, den)``.
    """
    if tol < 0:
        raise InvalidInputError(f"tolerance must be non-negative, got {tol}")
    return abs(r.w * ar.den - r.h * ar.num) <= tol * max(ar.num, ar.den)
