"""IOU benchmark protocols over cropping manifests.

The harness consumes precomputed evidence files keyed by image id (MAP1
aesthetic maps or FST1/HEAD1 feature exports, plus detection documents), runs
the cropping engine per manifest item, and reports the best-match IOU against
that item's ground-truth croppings. Items fail individually (missing evidence,
unresolvable entity, degenerate maps) without aborting the run; the mean skips
failures unless they are explicitly counted as zero.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Literal, Mapping

from .aesthetics import aesthetic_map, read_classifier_head, read_feature_stack
from .cropper import CandidateConfig, CombineWeights, best_crops
from .datasets import Manifest
from .errors import DegenerateMapError, InvalidInputError, SemcropError
from .geometry import Rect, iou
from .maps import ScoreMap, read_map
from .semantics import (
    DetectionDocument,
    EntityQuery,
    ResolutionConfig,
    Taxonomy,
    load_detections,
    resolve_entity,
    semantic_map,
)

Protocol = Literal["best_of_n", "per_pair"]


def best_match_iou(predicted: Rect, truths: list[Rect] | tuple[Rect, ...]) -> float:
    """Best IOU between the prediction and any of the ground-truth croppings."""
    if not truths:
        raise InvalidInputError("best-match IOU needs at least one ground truth")
    return max(iou(predicted, t) for t in truths)


@dataclass(frozen=True)
class EvalConfig:
    """Everything that parameterizes one benchmark run."""

    weights: CombineWeights
    candidates: CandidateConfig
    protocol: Protocol = "per_pair"
    resolution: ResolutionConfig = ResolutionConfig()
    include_failures_as_zero: bool = False

    def describe(self) -> dict:
        return {
            "weights": {"aesthetic": self.weights.aesthetic, "semantic": self.weights.semantic},
            "aspect": str(self.candidates.aspect),
            "stride": self.candidates.stride,
            "scale_fractions": list(self.candidates.scale_fractions),
            "protocol": self.protocol,
            "threshold": self.resolution.threshold,
            "squashing": self.resolution.squashing,
            "include_failures_as_zero": self.include_failures_as_zero,
        }

    def model_name(self) -> str:
        if self.weights.semantic == 0:
            return "aesthetic model"
        if self.weights.aesthetic == 0:
            return "semantic model"
        return "combined model"


@dataclass(frozen=True)
class EvalItem:
    """Outcome for one manifest item (an image, or an image-entity pair)."""

    image_id: str
    entity: str | None
    predicted: Rect | None
    best_iou: float | None
    status: str  # "ok" or a failure reason

    @property
    def ok(self) -> bool:
        return self.status == "ok"


@dataclass(frozen=True)
class EvalReport:
    """Per-item results plus the mean IOU over the items that produced one."""

    config: dict
    items: tuple[EvalItem, ...]
    mean_iou: float | None

    @property
    def failures(self) -> list[EvalItem]:
        return [item for item in self.items if not item.ok]


class EvidenceDir:
    """Evidence lookup by image id under a fixed naming convention.

    ``<id>.amap`` is a ready MAP1 aesthetic map, ``<id>.fst`` plus
    ``<id>.head`` an exported feature stack and classifier head, and
    ``<id>.det`` a detection document.
    """

    def __init__(self, root: str | Path):
        self.root = Path(root)

    def aesthetic_map_for(self, image_id: str, width: int, height: int) -> ScoreMap | None:
        amap = self.root / f"{image_id}.amap"
        if amap.exists():
            m = read_map(amap)
            if (m.width, m.height) != (width, height):
                raise InvalidInputError(
                    f"{amap}: map is {m.width}x{m.height}, image is {width}x{height}"
                )
            return m
        fst = self.root / f"{image_id}.fst"
        head = self.root / f"{image_id}.head"
        if fst.exists() and head.exists():
            return aesthetic_map(read_feature_stack(fst), read_classifier_head(head), width, height)
        return None

    def detections_for(self, image_id: str) -> DetectionDocument | None:
        det = self.root / f"{image_id}.det"
        if det.exists():
            return load_detections(det)
        return None


def _semantic_evidence(
    evidence: EvidenceDir,
    image_id: str,
    width: int,
    height: int,
    entity: str,
    taxonomy: Taxonomy,
    cfg: EvalConfig,
) -> ScoreMap:
    doc = evidence.detections_for(image_id)
    if doc is None:
        raise SemcropError("missing detections")
    if (doc.width, doc.height) != (width, height):
        raise InvalidInputError(
            f"detections are for {doc.width}x{doc.height}, image is {width}x{height}"
        )
    resolved = resolve_entity(taxonomy, EntityQuery(entity), list(doc.detections), cfg.resolution)
    if resolved is None:
        raise SemcropError(f"entity {entity!r} did not resolve above threshold")
    chosen = [d for d in doc.detections if d.label == resolved.label]
    return semantic_map(width, height, chosen)


def evaluate(
    manifest: Manifest,
    evidence: EvidenceDir,
    cfg: EvalConfig,
    taxonomy: Taxonomy | None = None,
) -> EvalReport:
    """Run the engine over every manifest item and score it against ground truth.

    Semantic manifests evaluate per image-entity pair under the ``per_pair``
    protocol (each pair's own croppings are the truths) or per image under
    ``best_of_n`` (all of the image's croppings pooled, entity ignored).
    Aesthetic manifests always evaluate per image.
    """
    items: list[EvalItem] = []
    for image, entity, truths in _iter_items(manifest, cfg.protocol):
        items.append(
            _evaluate_item(image.id, image.width, image.height, entity, truths,
                           evidence, cfg, taxonomy)
        )
    items.sort(key=lambda it: (it.image_id, it.entity or ""))

    scores = [it.best_iou for it in items if it.ok]
    if cfg.include_failures_as_zero:
        scores += [0.0 for it in items if not it.ok]
    mean = sum(scores) / len(scores) if scores else None
    return EvalReport(cfg.describe(), tuple(items), mean)


def _iter_items(manifest: Manifest, protocol: Protocol):
    if manifest.kind == "semantic" and protocol == "per_pair":
        for rec in manifest.semantic_records():
            yield rec.image, rec.entity, rec.croppings
    elif manifest.kind == "semantic":
        pooled: dict[str, tuple] = {}
        for rec in manifest.semantic_records():
            image, crops = pooled.get(rec.image.id, (rec.image, ()))
            pooled[rec.image.id] = (image, crops + rec.croppings)
        for image, crops in pooled.values():
            yield image, None, crops
    else:
        for rec in manifest.cropping_sets():
            yield rec.image, None, rec.croppings


def _evaluate_item(
    image_id: str,
    width: int,
    height: int,
    entity: str | None,
    truths,
    evidence: EvidenceDir,
    cfg: EvalConfig,
    taxonomy: Taxonomy | None,
) -> EvalItem:
    try:
        if cfg.weights.aesthetic > 0:
            a = evidence.aesthetic_map_for(image_id, width, height)
            if a is None:
                return EvalItem(image_id, entity, None, None, "missing aesthetic evidence")
        else:
            a = ScoreMap.constant(width, height, 0.0)

        s = None
        if cfg.weights.semantic > 0 and entity is not None:
            if taxonomy is None:
                return EvalItem(image_id, entity, None, None, "no taxonomy provided")
            s = _semantic_evidence(evidence, image_id, width, height, entity, taxonomy, cfg)

        top = best_crops(a, s, cfg.weights, cfg.candidates, n=1)
        if not top:
            return EvalItem(image_id, entity, None, None, "no feasible candidate window")
        predicted = top[0].rect
        return EvalItem(image_id, entity, predicted, best_match_iou(predicted, truths), "ok")
    except (SemcropError, DegenerateMapError, InvalidInputError) as exc:
        return EvalItem(image_id, entity, None, None, str(exc))


def dump_report(report: EvalReport) -> str:
    """Canonical JSON for a report. Contains no timestamps, so identical runs
    produce identical bytes."""
    doc = {
        "config": report.config,
        "items": [
            {
                "id": it.image_id,
                **({"entity": it.entity} if it.entity is not None else {}),
                **(
                    {
                        "predicted": {
                            "x": it.predicted.x,
                            "y": it.predicted.y,
                            "w": it.predicted.w,
                            "h": it.predicted.h,
                        }
                    }
                    if it.predicted is not None
                    else {}
                ),
                **({"best_iou": it.best_iou} if it.best_iou is not None else {}),
                "status": it.status,
            }
            for it in report.items
        ],
        "mean_iou": report.mean_iou,
        "failures": [
            {"id": it.image_id, **({"entity": it.entity} if it.entity else {}), "reason": it.status}
            for it in report.failures
        ],
    }
    return json.dumps(doc, indent=2) + "\n"


def format_report(report: EvalReport) -> str:
    """Human-readable per-item table with the mean as a footer."""
    lines = [f"{'item':<28} {'entity':<16} {'best IOU':>9}  status"]
    for it in report.items:
        iou_text = f"{it.best_iou:.4f}" if it.best_iou is not None else "-"
        lines.append(f"{it.image_id:<28} {it.entity or '-':<16} {iou_text:>9}  {it.status}")
    ok = sum(1 for it in report.items if it.ok)
    failed = len(report.items) - ok
    mean_text = f"{report.mean_iou:.4f}" if report.mean_iou is not None else "undefined"
    lines.append(f"mean IOU over {ok} items ({failed} failed): {mean_text}")
    return "\n".join(lines)


def format_comparison(reports: Mapping[str, EvalReport]) -> str:
    """Model-per-row summary table (one mean IOU column per run)."""
    width = max(len(name) for name in reports) if reports else 10
    lines = [f"{'Method':<{width}}  Mean IOU"]
    for name, report in reports.items():
        mean_text = f"{report.mean_iou:.4f}" if report.mean_iou is not None else "undefined"
        lines.append(f"{name:<{width}}  {mean_text}")
    return "\n".join(lines)
