"""Ground-truth cropping manifests and the append-only annotation store.

Two manifest kinds cover the benchmark styles: ``aesthetic`` manifests carry a
set of good croppings per image, ``semantic`` manifests carry croppings per
image-entity pair (square within a pixel, one to four per pair). Manifests are
single JSON documents with a canonical serialization, so export/load/export
round-trips are byte-identical.

Annotations collected by the crop-annotation tool append to a JSONL store, one
record per line: ``{seq, task_id, image_id, entity, worker_id,
crop{x,y,w,h}, ts}``. Appends are serialized and each record is written with a
single call, so concurrent writers can never interleave bytes.
"""

from __future__ import annotations

import json
import os
import threading
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Literal, Mapping

from .errors import (
    AnnotationError,
    DuplicateAnnotationError,
    InvalidInputError,
    ManifestError,
)
from .geometry import SQUARE, AspectRatio, Rect, matches_ratio

ManifestKind = Literal["aesthetic", "semantic"]

MANIFEST_VERSION = 1
ASPECT_TOLERANCE_PX = 1
MAX_CROPPINGS_PER_PAIR = 4


@dataclass(frozen=True)
class ImageInfo:
    """Identity, location, and pixel dimensions of one dataset image."""

    id: str
    path: str
    width: int
    height: int

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise InvalidInputError(
                f"image {self.id!r} has non-positive size {self.width}x{self.height}"
            )


@dataclass(frozen=True)
class CroppingRecordSet:
    """All ground-truth croppings for one image (aesthetic-style datasets)."""

    image: ImageInfo
    croppings: tuple[Rect, ...]


@dataclass(frozen=True)
class SemanticRecord:
    """Ground-truth croppings for one image-entity pair (square, 1 to 4 of them)."""

    image: ImageInfo
    entity: str
    croppings: tuple[Rect, ...]


@dataclass(frozen=True)
class Manifest:
    """A parsed, validated manifest of either kind."""

    kind: ManifestKind
    version: int
    records: tuple[CroppingRecordSet, ...] | tuple[SemanticRecord, ...]

    def images(self) -> list[ImageInfo]:
        seen: dict[str, ImageInfo] = {}
        for rec in self.records:
            seen.setdefault(rec.image.id, rec.image)
        return list(seen.values())

    def semantic_records(self) -> tuple[SemanticRecord, ...]:
        if self.kind != "semantic":
            raise InvalidInputError(f"manifest kind is {self.kind!r}, not semantic")
        return self.records  # type: ignore[return-value]

    def cropping_sets(self) -> tuple[CroppingRecordSet, ...]:
        if self.kind != "aesthetic":
            raise InvalidInputError(f"manifest kind is {self.kind!r}, not aesthetic")
        return self.records  # type: ignore[return-value]


def _parse_rect(obj, where: str, errors: list[tuple[str, str]]) -> Rect | None:
    try:
        return Rect(int(obj["x"]), int(obj["y"]), int(obj["w"]), int(obj["h"]))
    except (KeyError, TypeError, ValueError, InvalidInputError) as exc:
        errors.append((where, f"malformed cropping {obj!r}: {exc}"))
        return None


def _validate_cropping(
    rect: Rect,
    image: ImageInfo,
    where: str,
    errors: list[tuple[str, str]],
    require_square: bool,
) -> None:
    if not rect.within(image.width, image.height):
        errors.append(
            (where, f"cropping {rect} extends past the {image.width}x{image.height} image")
        )
    if require_square and not matches_ratio(rect, SQUARE, ASPECT_TOLERANCE_PX):
        errors.append((where, f"cropping {rect} is not square within {ASPECT_TOLERANCE_PX} px"))


def load_manifest(path: str | Path, kind: ManifestKind, check_images: bool = False) -> Manifest:
    """Parse and validate a manifest document.

    Every invariant violation is collected and reported together in the raised
    :class:`ManifestError`, each tagged with the offending record's id.
    """
    path = Path(path)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"{path}: cannot read manifest: {exc}") from exc
    return parse_manifest(doc, kind, base_dir=path.parent if check_images else None)


def parse_manifest(
    doc, kind: ManifestKind, base_dir: Path | None = None
) -> Manifest:
    """Validate an already-parsed manifest document (see :func:`load_manifest`)."""
    if kind not in ("aesthetic", "semantic"):
        raise InvalidInputError(f"unknown manifest kind {kind!r}")
    errors: list[tuple[str, str]] = []
    if not isinstance(doc, dict) or "images" not in doc:
        raise ManifestError("manifest document needs an 'images' list")
    version = int(doc.get("version", MANIFEST_VERSION))

    records: list = []
    seen_ids: set[str] = set()
    for entry in doc["images"]:
        try:
            image = ImageInfo(
                id=str(entry["id"]),
                path=str(entry.get("path", "")),
                width=int(entry["width"]),
                height=int(entry["height"]),
            )
        except (KeyError, TypeError, ValueError, InvalidInputError) as exc:
            errors.append((str(entry.get("id", "?")), f"malformed image entry: {exc}"))
            continue
        if image.id in seen_ids:
            errors.append((image.id, "duplicate image id"))
            continue
        seen_ids.add(image.id)
        if base_dir is not None and image.path and not (base_dir / image.path).exists():
            errors.append((image.id, f"referenced image file {image.path!r} does not exist"))

        if kind == "aesthetic":
            crops = []
            for obj in entry.get("croppings", []):
                rect = _parse_rect(obj, image.id, errors)
                if rect is not None:
                    _validate_cropping(rect, image, image.id, errors, require_square=False)
                    crops.append(rect)
            if not crops:
                errors.append((image.id, "image has no croppings"))
                continue
            records.append(CroppingRecordSet(image, tuple(crops)))
        else:
            entities = entry.get("entities", [])
            if not entities:
                errors.append((image.id, "image has no entities"))
                continue
            seen_entities: set[str] = set()
            for ent in entities:
                name = str(ent.get("name", "")) if isinstance(ent, dict) else ""
                where = f"{image.id}/{name or '?'}"
                if not name:
                    errors.append((where, "entity entry has no name"))
                    continue
                if name in seen_entities:
                    errors.append((where, "duplicate entity for image"))
                    continue
                seen_entities.add(name)
                crops = []
                for obj in ent.get("croppings", []):
                    rect = _parse_rect(obj, where, errors)
                    if rect is not None:
                        _validate_cropping(rect, image, where, errors, require_square=True)
                        crops.append(rect)
                if not 1 <= len(crops) <= MAX_CROPPINGS_PER_PAIR:
                    errors.append(
                        (where, f"pair has {len(crops)} croppings, expected 1..{MAX_CROPPINGS_PER_PAIR}")
                    )
                    continue
                records.append(SemanticRecord(image, name, tuple(crops)))

    _check_counts(doc, kind, records, errors)
    if errors:
        summary = "; ".join(f"{rid}: {msg}" for rid, msg in errors[:5])
        more = f" (+{len(errors) - 5} more)" if len(errors) > 5 else ""
        raise ManifestError(f"manifest failed validation: {summary}{more}", errors)
    return Manifest(kind, version, tuple(records))


def _check_counts(doc, kind: ManifestKind, records: list, errors: list[tuple[str, str]]) -> None:
    """Validate the optional counts header against the document's own contents."""
    counts = doc.get("counts")
    if not isinstance(counts, dict):
        return
    image_ids = {rec.image.id for rec in records}
    actual = {
        "images": len(image_ids),
        "croppings": sum(len(rec.croppings) for rec in records),
    }
    if kind == "semantic":
        actual["pairs"] = len(records)
    for key, declared in counts.items():
        if key not in actual:
            errors.append(("counts", f"unknown count field {key!r}"))
        elif int(declared) != actual[key]:
            errors.append(
                ("counts", f"header declares {declared} {key} but document has {actual[key]}")
            )


def _rect_obj(r: Rect) -> dict:
    return {"x": r.x, "y": r.y, "w": r.w, "h": r.h}


def dump_manifest(manifest: Manifest, include_counts: bool = True) -> str:
    """Serialize a manifest canonically.

    Images sort by id and entities by name, so any manifest describing the
    same records serializes to the same bytes.
    """
    by_image: dict[str, dict] = {}
    pairs = 0
    croppings = 0
    for rec in manifest.records:
        img = by_image.setdefault(
            rec.image.id,
            {
                "id": rec.image.id,
                "path": rec.image.path,
                "width": rec.image.width,
                "height": rec.image.height,
            },
        )
        croppings += len(rec.croppings)
        if manifest.kind == "aesthetic":
            img["croppings"] = [_rect_obj(r) for r in rec.croppings]
        else:
            pairs += 1
            img.setdefault("entities", []).append(
                {"name": rec.entity, "croppings": [_rect_obj(r) for r in rec.croppings]}
            )
    images = [by_image[key] for key in sorted(by_image)]
    for img in images:
        if "entities" in img:
            img["entities"].sort(key=lambda e: e["name"])

    doc: dict = {"version": manifest.version}
    if include_counts:
        counts = {"images": len(images), "croppings": croppings}
        if manifest.kind == "semantic":
            counts["pairs"] = pairs
        doc["counts"] = counts
    doc["images"] = images
    return json.dumps(doc, indent=2) + "\n"


@dataclass(frozen=True)
class AnnotationRecord:
    """One worker's cropping for one task, in original-image coordinates."""

    task_id: str
    image_id: str
    entity: str
    worker_id: str
    crop: Rect
    ts: str = field(default="")

    def __post_init__(self):
        if not self.task_id or not self.worker_id:
            raise InvalidInputError("annotation needs a task_id and a worker_id")
        if not self.ts:
            object.__setattr__(
                self, "ts", datetime.now(timezone.utc).isoformat(timespec="seconds")
            )


class AnnotationStore:
    """Durable append-only store of annotation records.

    Existing lines are indexed at open so duplicate (task, worker) pairs are
    rejected across restarts. Each append validates the record, assigns the
    next sequence number, and writes one complete line under a lock with an
    fsync, so records are never torn or silently clipped.
    """

    def __init__(
        self,
        path: str | Path,
        images: Mapping[str, ImageInfo] | None = None,
        aspect: AspectRatio = SQUARE,
    ):
        self.path = Path(path)
        self.images = dict(images) if images else None
        self.aspect = aspect
        self._lock = threading.Lock()
        self._records: list[tuple[int, AnnotationRecord]] = []
        self._seen: set[tuple[str, str]] = set()
        self._next_seq = 1
        if self.path.exists():
            self._load_existing()

    def _load_existing(self) -> None:
        for lineno, line in enumerate(self.path.read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
                rec = AnnotationRecord(
                    task_id=obj["task_id"],
                    image_id=obj["image_id"],
                    entity=obj["entity"],
                    worker_id=obj["worker_id"],
                    crop=Rect(
                        int(obj["crop"]["x"]),
                        int(obj["crop"]["y"]),
                        int(obj["crop"]["w"]),
                        int(obj["crop"]["h"]),
                    ),
                    ts=obj.get("ts", ""),
                )
                seq = int(obj["seq"])
            except (KeyError, TypeError, ValueError, json.JSONDecodeError) as exc:
                raise AnnotationError(f"{self.path}:{lineno}: corrupt annotation line: {exc}") from exc
            self._records.append((seq, rec))
            self._seen.add((rec.task_id, rec.worker_id))
            self._next_seq = max(self._next_seq, seq + 1)

    def _validate(self, rec: AnnotationRecord) -> None:
        if not matches_ratio(rec.crop, self.aspect, ASPECT_TOLERANCE_PX):
            raise AnnotationError(
                f"crop {rec.crop} does not match aspect {self.aspect} within "
                f"{ASPECT_TOLERANCE_PX} px"
            )
        if self.images is not None:
            info = self.images.get(rec.image_id)
            if info is None:
                raise AnnotationError(f"unknown image id {rec.image_id!r}")
            if not rec.crop.within(info.width, info.height):
                raise AnnotationError(
                    f"crop {rec.crop} extends past the {info.width}x{info.height} image"
                )

    def append(self, rec: AnnotationRecord) -> int:
        """Validate, persist, and return the record's sequence number."""
        self._validate(rec)
        with self._lock:
            key = (rec.task_id, rec.worker_id)
            if key in self._seen:
                raise DuplicateAnnotationError(
                    f"worker {rec.worker_id!r} already annotated task {rec.task_id!r}"
                )
            seq = self._next_seq
            line = json.dumps(
                {
                    "seq": seq,
                    "task_id": rec.task_id,
                    "image_id": rec.image_id,
                    "entity": rec.entity,
                    "worker_id": rec.worker_id,
                    "crop": _rect_obj(rec.crop),
                    "ts": rec.ts,
                },
                separators=(",", ":"),
            )
            with open(self.path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()
                os.fsync(fh.fileno())
            self._seen.add(key)
            self._records.append((seq, rec))
            self._next_seq = seq + 1
            return seq

    def records(self) -> list[tuple[int, AnnotationRecord]]:
        """Consistent snapshot of (seq, record) pairs in append order."""
        with self._lock:
            return list(self._records)

    def count_for_task(self, task_id: str) -> int:
        with self._lock:
            return sum(1 for _, rec in self._records if rec.task_id == task_id)

    def has(self, task_id: str, worker_id: str) -> bool:
        with self._lock:
            return (task_id, worker_id) in self._seen


def export_semantic_manifest(
    store: AnnotationStore, images: Mapping[str, ImageInfo] | None = None
) -> Manifest:
    """Group stored annotations into a semantic manifest.

    Croppings within a pair keep their sequence order; images and entities
    are emitted sorted, so the export is deterministic and round-trips through
    :func:`load_manifest` byte-identically.
    """
    registry = dict(images) if images is not None else store.images
    grouped: dict[tuple[str, str], list[tuple[int, AnnotationRecord]]] = {}
    for seq, rec in store.records():
        grouped.setdefault((rec.image_id, rec.entity), []).append((seq, rec))

    records: list[SemanticRecord] = []
    for (image_id, entity), items in sorted(grouped.items()):
        items.sort(key=lambda pair: pair[0])
        info = (registry or {}).get(image_id)
        if info is None:
            raise AnnotationError(
                f"cannot export: no image dimensions registered for {image_id!r}"
            )
        records.append(
            SemanticRecord(info, entity, tuple(rec.crop for _, rec in items))
        )
    return Manifest("semantic", MANIFEST_VERSION, tuple(records))
