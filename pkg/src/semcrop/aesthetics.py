"""Per-pixel aesthetic scoring from an ingested feature stack.

No neural inference happens here. An external trainer exports the last
convolutional layer's feature maps (FST1 file) and the pooled-classifier
weights (HEAD1 file); this module turns them into class activation grids,
image-sized aesthetic maps, and two-class quality predictions, and provides
the label thresholding and weighted cross-entropy used on rating data.

FST1 format (little-endian): magic ``FST1``, uint32 map count L, uint32
grid height, uint32 grid width, then ``L * grid_h * grid_w`` float32 values,
map-major and row-major within each map.

HEAD1 format (little-endian): magic ``HEAD1``, uint32 class count m, uint32
L, then ``m * L`` float32 weights (class-major), then m class labels, each a
uint32 byte length followed by UTF-8 text.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
import numpy as np

from .errors import InvalidInputError, LossDomainError
from .maps import ScoreMap, normalize, resize_bilinear

FEATURE_MAGIC = b"FST1"
HEAD_MAGIC = b"HEAD1"

HIGH_QUALITY = "high"
LOW_QUALITY = "low"


@dataclass(frozen=True)
class FeatureStack:
    """L feature grids of identical shape, as exported by a trained backbone."""

    values: np.ndarray  # shape (L, grid_h, grid_w)

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=np.float64)
        if arr.ndim != 3 or arr.shape[0] < 1 or arr.shape[1] < 1 or arr.shape[2] < 1:
            raise InvalidInputError(f"feature stack must have shape (L, h, w), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("feature stack values must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "values", arr)

    @property
    def count(self) -> int:
        return self.values.shape[0]

    @property
    def grid_h(self) -> int:
        return self.values.shape[1]

    @property
    def grid_w(self) -> int:
        return self.values.shape[2]


@dataclass(frozen=True)
class ClassifierHead:
    """Pooled-feature classifier: one weight vector of length L per class."""

    classes: tuple[str, ...]
    weights: np.ndarray  # shape (m, L)

    def __post_init__(self):
        classes = tuple(self.classes)
        if not classes:
            raise InvalidInputError("classifier head needs at least one class")
        if len(set(classes)) != len(classes):
            raise InvalidInputError("classifier head class labels must be unique")
        arr = np.asarray(self.weights, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] != len(classes):
            raise InvalidInputError(
                f"weights must have shape (classes, L) = ({len(classes)}, L), got {arr.shape}"
            )
        if not np.all(np.isfinite(arr)):
            raise InvalidInputError("classifier weights must be finite")
        arr = arr.copy()
        arr.flags.writeable = False
        object.__setattr__(self, "classes", classes)
        object.__setattr__(self, "weights", arr)

    @property
    def feature_count(self) -> int:
        return self.weights.shape[1]

    def class_index(self, label: str) -> int:
        try:
            return self.classes.index(label)
        except ValueError:
            raise InvalidInputError(f"unknown class {label!r}, head has {self.classes}") from None


@dataclass(frozen=True)
class AvaRating:
    """Mean aesthetic rating of one image on the 1..10 scale."""

    image_id: str
    mean_rating: float

    def __post_init__(self):
        if not 1.0 <= self.mean_rating <= 10.0:
            raise InvalidInputError(
                f"rating for {self.image_id!r} must be in [1, 10], got {self.mean_rating}"
            )


@dataclass(frozen=True)
class LossParams:
    """Per-class weights for the weighted cross-entropy."""

    class_weights: tuple[float, ...]

    def __post_init__(self):
        weights = tuple(float(w) for w in self.class_weights)
        if not weights or any(w <= 0 for w in weights):
            raise InvalidInputError(f"class weights must all be positive, got {weights}")
        object.__setattr__(self, "class_weights", weights)


def class_activation_map(fs: FeatureStack, head: ClassifierHead, class_label: str) -> ScoreMap:
    """Weighted sum of feature grids using the class's pooled-classifier weights.

    Returns the raw activation grid at feature resolution; values may be
    negative. Its spatial mean equals the class logit from
    :func:`gap_classify` (both are linear in the same weights).
    """
    if fs.count != head.feature_count:
        raise InvalidInputError(
            f"feature stack has {fs.count} maps but head expects {head.feature_count}"
        )
    w = head.weights[head.class_index(class_label)]
    raw = np.tensordot(w, fs.values, axes=(0, 0))
    return ScoreMap(raw)


def gap_classify(fs: FeatureStack, head: ClassifierHead) -> np.ndarray:
    """Class probabilities from average-pooled features through a softmax.

    Logit for class c is the weighted sum of per-map spatial means. Softmax is
    computed after subtracting the max logit for numeric stability.
    """
    if fs.count != head.feature_count:
        raise InvalidInputError(
            f"feature stack has {fs.count} maps but head expects {head.feature_count}"
        )
    pooled = fs.values.mean(axis=(1, 2))
    logits = head.weights @ pooled
    shifted = np.exp(logits - logits.max())
    return shifted / shifted.sum()


def gap_logit(fs: FeatureStack, head: ClassifierHead, class_label: str) -> float:
    """Pre-softmax score for one class."""
    if fs.count != head.feature_count:
        raise InvalidInputError(
            f"feature stack has {fs.count} maps but head expects {head.feature_count}"
        )
    pooled = fs.values.mean(axis=(1, 2))
    return float(head.weights[head.class_index(class_label)] @ pooled)


def aesthetic_map(fs: FeatureStack, head: ClassifierHead, img_w: int, img_h: int) -> ScoreMap:
    """Image-sized per-pixel aesthetic score in [0, 1].

    The raw activation grid for the high-quality class is clamped at zero
    (negative activations argue against high quality), min-max normalized,
    and bilinearly resized to the image dimensions. A grid that is constant
    after clamping carries no signal and raises :class:`DegenerateMapError`.
    """
    if img_w <= 0 or img_h <= 0:
        raise InvalidInputError(f"image size must be positive, got {img_w}x{img_h}")
    raw = class_activation_map(fs, head, HIGH_QUALITY)
    clamped = ScoreMap(np.maximum(raw.values, 0.0))
    scaled = normalize(clamped, "minmax")
    return resize_bilinear(scaled, img_w, img_h)


def ava_label(r: AvaRating) -> str:
    """Map a mean rating to ``high``, ``low``, or ``ignored``.

    Ratings of 7 or more are high quality, 4 or less low quality; the
    ambiguous middle band is ignored (not used for training or evaluation).
    """
    if r.mean_rating >= 7.0:
        return "high"
    if r.mean_rating <= 4.0:
        return "low"
    return "ignored"


def weighted_cross_entropy(
    truth: np.ndarray, pred: np.ndarray, params: LossParams
) -> float:
    """Class-weighted categorical cross-entropy, averaged over samples.

    ``truth`` holds one-hot rows, ``pred`` probability rows summing to 1
    within 1e-6. With unit weights this is the standard categorical
    cross-entropy; the loss is linear in the class weights.
    """
    truth = np.asarray(truth, dtype=np.float64)
    pred = np.asarray(pred, dtype=np.float64)
    if truth.ndim == 1:
        truth = truth[None, :]
    if pred.ndim == 1:
        pred = pred[None, :]
    if truth.shape != pred.shape:
        raise InvalidInputError(f"truth shape {truth.shape} != pred shape {pred.shape}")
    n, m = truth.shape
    if len(params.class_weights) != m:
        raise InvalidInputError(
            f"{len(params.class_weights)} class weights for {m} classes"
        )
    row_sums = pred.sum(axis=1)
    if np.any(np.abs(row_sums - 1.0) > 1e-6):
        raise InvalidInputError("each prediction row must sum to 1 within 1e-6")
    if np.any((truth != 0.0) & (truth != 1.0)) or np.any(truth.sum(axis=1) != 1.0):
        raise InvalidInputError("truth rows must be one-hot")

    true_probs = pred[truth == 1.0]
    if np.any(true_probs <= 0.0):
        raise LossDomainError("predicted probability at a true class is zero")
    weights = np.asarray(params.class_weights)[truth.argmax(axis=1)]
    return float(-(weights * np.log(true_probs)).sum() / n)


def write_feature_stack(fs: FeatureStack, path: str | Path) -> None:
    """Write ``fs`` in the FST1 binary format."""
    with open(path, "wb") as fh:
        fh.write(FEATURE_MAGIC)
        fh.write(struct.pack("<III", fs.count, fs.grid_h, fs.grid_w))
        fh.write(fs.values.astype("<f4").tobytes(order="C"))


def read_feature_stack(path: str | Path) -> FeatureStack:
    """Read an FST1 file."""
    raw = Path(path).read_bytes()
    if len(raw) < 16 or raw[:4] != FEATURE_MAGIC:
        raise InvalidInputError(f"{path}: not an FST1 file")
    count, grid_h, grid_w = struct.unpack_from("<III", raw, 4)
    expected = 16 + 4 * count * grid_h * grid_w
    if count == 0 or grid_h == 0 or grid_w == 0 or len(raw) != expected:
        raise InvalidInputError(f"{path}: bad FST1 payload")
    values = np.frombuffer(raw, dtype="<f4", count=count * grid_h * grid_w, offset=16)
    return FeatureStack(values.reshape(count, grid_h, grid_w).astype(np.float64))


def write_classifier_head(head: ClassifierHead, path: str | Path) -> None:
    """Write ``head`` in the HEAD1 binary format."""
    with open(path, "wb") as fh:
        fh.write(HEAD_MAGIC)
        fh.write(struct.pack("<II", len(head.classes), head.feature_count))
        fh.write(head.weights.astype("<f4").tobytes(order="C"))
        for label in head.classes:
            encoded = label.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)


def read_classifier_head(path: str | Path) -> ClassifierHead:
    """Read a HEAD1 file."""
    raw = Path(path).read_bytes()
    if len(raw) < 13 or raw[:5] != HEAD_MAGIC:
        raise InvalidInputError(f"{path}: not a HEAD1 file")
    m, count = struct.unpack_from("<II", raw, 5)
    if m == 0 or count == 0:
        raise InvalidInputError(f"{path}: bad HEAD1 header")
    offset = 13
    need = offset + 4 * m * count
    if len(raw) < need:
        raise InvalidInputError(f"{path}: truncated HEAD1 weights")
    weights = np.frombuffer(raw, dtype="<f4", count=m * count, offset=offset)
    weights = weights.reshape(m, count).astype(np.float64)
    offset = need
    labels = []
    for _ in range(m):
        if len(raw) < offset + 4:
            raise InvalidInputError(f"{path}: truncated HEAD1 labels")
        (length,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        if len(raw) < offset + length:
            raise InvalidInputError(f"{path}: truncated HEAD1 labels")
        labels.append(raw[offset : offset + length].decode("utf-8"))
        offset += length
    if offset != len(raw):
        raise InvalidInputError(f"{path}: trailing bytes after HEAD1 labels")
    return ClassifierHead(tuple(labels), weights)


def read_ava_ratings(path: str | Path) -> list[AvaRating]:
    """Read delimited rating lines: ``image_id, mean_rating`` per line.

    Accepts comma or whitespace delimited text; blank lines and ``#`` comments
    are skipped.
    """
    ratings = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p for p in line.replace(",", " ").split() if p]
        if len(parts) != 2:
            raise InvalidInputError(f"{path}:{lineno}: expected 'image_id rating', got {line!r}")
        try:
            rating = float(parts[1])
        except ValueError as exc:
            raise InvalidInputError(f"{path}:{lineno}: bad rating {parts[1]!r}") from exc
        ratings.append(AvaRating(parts[0], rating))
    return ratings
