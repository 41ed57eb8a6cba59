"""Detection-side classification loss, verified at desk scale.

Pure scalar formulas plus a batch-mean convenience; no gradients, sampling,
or anchor machinery.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable

from .errors import InvalidInputError, LossDomainError


@dataclass(frozen=True)
class FocalParams:
    """Focusing exponent and class-balance factor for the focal loss."""

    alpha: float
    gamma: float

    def __post_init__(self):
        if self.alpha <= 0:
            raise InvalidInputError(f"alpha must be positive, got {self.alpha}")
        if self.gamma < 0:
            raise InvalidInputError(f"gamma must be non-negative, got {self.gamma}")


def true_class_probability(p: float, y: int) -> float:
    """Probability assigned to the ground-truth side of a binary prediction.

    For a positive label (y = 1) that is ``p`` itself, otherwise ``1 - p``.
    """
    if not 0.0 <= p <= 1.0:
        raise InvalidInputError(f"probability must be in [0, 1], got {p}")
    return p if y == 1 else 1.0 - p


def focal_loss(pt: float, params: FocalParams) -> float:
    """``-alpha * (1 - pt)**gamma * ln(pt)`` for a single prediction.

    Down-weights well-classified examples: the higher the true-class
    probability, the smaller the loss, and larger gamma suppresses easy
    examples harder. Natural logarithm throughout. With gamma = 0 this reduces
    to alpha times the plain cross-entropy.
    """
    if pt <= 0.0:
        raise LossDomainError("focal loss is infinite at zero true-class probability")
    if pt > 1.0:
        raise InvalidInputError(f"probability must be in (0, 1], got {pt}")
    return -params.alpha * (1.0 - pt) ** params.gamma * math.log(pt)


def focal_loss_mean(pts: Iterable[float], params: FocalParams) -> float:
    """Mean focal loss over a batch of true-class probabilities."""
    values = [focal_loss(pt, params) for pt in pts]
    if not values:
        raise InvalidInputError("batch must contain at least one probability")
    return sum(values) / len(values)
