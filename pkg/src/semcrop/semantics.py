"""Entity resolution over a concept taxonomy and semantic map construction.

Object detections arrive as (label, confidence, box) triples from any external
detector. A free-text entity query is matched against the detector labels by
enumerating the query's possible meanings in a taxonomy (concept graph with
information-content values), scoring meaning pairs with the Jiang-Conrath
distance, and keeping the best label above a similarity threshold. The winning
detections become a per-pixel relevance map: a box mask, Gaussian-smoothed and
normalized.

Taxonomy documents are JSON: ``{"synsets": [{"id", "lemmas", "parents",
"ic"}, ...], "label_map": {detector_label: lemma, ...}}``. Detection documents
are JSON: ``{"image_id", "width", "height", "detections": [{"label", "score",
"box": {"x", "y", "w", "h"}}, ...]}``.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Literal, Mapping, Sequence

import numpy as np

from .errors import InvalidInputError, NoCommonAncestorError, TaxonomyError
from .geometry import Rect
from .maps import NormalizeMode, ScoreMap, gaussian_smooth, normalize

logger = logging.getLogger(__name__)

Squashing = Literal["reciprocal", "exponential"]

SIGMA_BOX_FRACTION = 0.1
SIGMA_MIN_PX = 1.0
SIGMA_MAX_PX = 25.0


def normalize_term(text: str) -> str:
    """Lowercase a term and join words with underscores (lemma convention)."""
    return "_".join(text.strip().lower().split())


@dataclass(frozen=True)
class Detection:
    """One detected object: detector class label, confidence, bounding box."""

    label: str
    score: float
    box: Rect

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise InvalidInputError(f"detection score must be in [0, 1], got {self.score}")


@dataclass(frozen=True)
class DetectionDocument:
    """All detections for one image, with the image dimensions they refer to."""

    image_id: str
    width: int
    height: int
    detections: tuple[Detection, ...]


@dataclass(frozen=True)
class Synset:
    """One concept: id, surface lemmas, parent concepts, information content."""

    id: str
    lemmas: tuple[str, ...]
    parents: tuple[str, ...]
    ic: float


@dataclass(frozen=True)
class EntityQuery:
    """Free-text entity to locate in an image."""

    raw: str
    normalized: str = field(init=False)

    def __post_init__(self):
        norm = normalize_term(self.raw)
        if not norm:
            raise InvalidInputError("entity query is empty after normalization")
        object.__setattr__(self, "normalized", norm)


@dataclass(frozen=True)
class ResolutionConfig:
    """Similarity threshold and squashing choice for entity resolution.

    The threshold applies to the squashed similarity in [0, 1]; the permissive
    default keeps exact lemma matches (similarity 1.0) always resolvable.
    """

    threshold: float = 0.1
    squashing: Squashing = "reciprocal"

    def __post_init__(self):
        if not 0.0 <= self.threshold <= 1.0:
            raise InvalidInputError(f"threshold must be in [0, 1], got {self.threshold}")
        if self.squashing not in ("reciprocal", "exponential"):
            raise InvalidInputError(f"unknown squashing {self.squashing!r}")


@dataclass(frozen=True)
class ResolvedEntity:
    """Winning detector label for a query, with its similarity score."""

    label: str
    similarity: float


class Taxonomy:
    """Immutable concept graph with information content and a detector label map.

    Validates on construction: unique ids, known parents, acyclicity, at least
    one root, and information content that never decreases from parent to
    child. Lemmas are normalized; every label-map target must be a known
    lemma.
    """

    def __init__(self, synsets: Sequence[Synset], label_map: Mapping[str, str] | None = None):
        by_id: dict[str, Synset] = {}
        for s in synsets:
            if s.id in by_id:
                raise TaxonomyError(f"duplicate synset id {s.id!r}")
            if s.ic < 0:
                raise TaxonomyError(f"synset {s.id!r} has negative information content")
            if not s.lemmas:
                raise TaxonomyError(f"synset {s.id!r} has no lemmas")
            by_id[s.id] = s
        if not by_id:
            raise TaxonomyError("taxonomy has no synsets")

        lemma_index: dict[str, list[str]] = {}
        roots = []
        for s in by_id.values():
            for p in s.parents:
                if p not in by_id:
                    raise TaxonomyError(f"synset {s.id!r} names unknown parent {p!r}")
                if by_id[p].ic > s.ic:
                    raise TaxonomyError(
                        f"information content decreases from {p!r} ({by_id[p].ic}) "
                        f"to child {s.id!r} ({s.ic})"
                    )
            if not s.parents:
                roots.append(s.id)
            for lemma in s.lemmas:
                lemma_index.setdefault(normalize_term(lemma), []).append(s.id)
        if not roots:
            raise TaxonomyError("taxonomy has no root synset")

        self._by_id = by_id
        self._lemma_index = {k: tuple(v) for k, v in lemma_index.items()}
        self._check_acyclic()

        self._label_map: dict[str, str] = {}
        for label, lemma in (label_map or {}).items():
            norm = normalize_term(lemma)
            if norm not in self._lemma_index:
                raise TaxonomyError(f"label map target {lemma!r} is not a known lemma")
            self._label_map[normalize_term(label)] = norm

        self._ancestor_cache: dict[str, frozenset[str]] = {}

    def _check_acyclic(self) -> None:
        state: dict[str, int] = {}  # 0 visiting, 1 done

        def visit(sid: str, trail: list[str]) -> None:
            mark = state.get(sid)
            if mark == 1:
                return
            if mark == 0:
                cycle = " -> ".join(trail + [sid])
                raise TaxonomyError(f"parent cycle: {cycle}")
            state[sid] = 0
            for p in self._by_id[sid].parents:
                visit(p, trail + [sid])
            state[sid] = 1

        for sid in self._by_id:
            visit(sid, [])

    def __contains__(self, sid: str) -> bool:
        return sid in self._by_id

    def synset(self, sid: str) -> Synset:
        try:
            return self._by_id[sid]
        except KeyError:
            raise InvalidInputError(f"unknown synset id {sid!r}") from None

    def ancestors(self, sid: str) -> frozenset[str]:
        """Transitive parents of ``sid``, including ``sid`` itself."""
        cached = self._ancestor_cache.get(sid)
        if cached is not None:
            return cached
        seen: set[str] = set()
        stack = [sid]
        while stack:
            cur = stack.pop()
            if cur in seen:
                continue
            seen.add(cur)
            stack.extend(self.synset(cur).parents)
        result = frozenset(seen)
        self._ancestor_cache[sid] = result
        return result

    def synsets_for_lemma(self, lemma: str) -> tuple[str, ...]:
        return self._lemma_index.get(normalize_term(lemma), ())

    def lemma_for_label(self, label: str) -> str:
        """Detector label to taxonomy lemma; falls back to the label itself."""
        norm = normalize_term(label)
        return self._label_map.get(norm, norm)


def senses(tax: Taxonomy, q: EntityQuery) -> list[str]:
    """All synset ids whose lemma set contains the normalized query."""
    return list(tax.synsets_for_lemma(q.normalized))


def _squash(distance: float, squashing: Squashing) -> float:
    if squashing == "reciprocal":
        return 1.0 / (1.0 + distance)
    return math.exp(-distance)


def jcn_similarity(
    tax: Taxonomy, a: str, b: str, squashing: Squashing = "reciprocal"
) -> float:
    """Jiang-Conrath similarity between two synsets, squashed into (0, 1].

    The underlying distance is ``ic(a) + ic(b) - 2 * ic(lcs)`` where the least
    common subsumer is the shared ancestor with the highest information
    content. The default squashing ``1 / (1 + distance)`` gives identical
    concepts similarity exactly 1.
    """
    common = tax.ancestors(a) & tax.ancestors(b)
    if not common:
        raise NoCommonAncestorError(f"synsets {a!r} and {b!r} share no ancestor")
    lcs_ic = max(tax.synset(sid).ic for sid in common)
    distance = tax.synset(a).ic + tax.synset(b).ic - 2.0 * lcs_ic
    return _squash(distance, squashing)


def resolve_entity(
    tax: Taxonomy,
    q: EntityQuery,
    detections: Sequence[Detection],
    cfg: ResolutionConfig = ResolutionConfig(),
) -> ResolvedEntity | None:
    """Pick the detector label most similar to the query, or ``None``.

    Every sense of the query is compared against every sense of every
    detection label; the best pair wins. Labels that resolve to no synset are
    skipped with a warning. Returns ``None`` when there are no detections, no
    senses, or the best similarity falls below the threshold.
    """
    query_senses = senses(tax, q)
    if not query_senses or not detections:
        return None

    best: ResolvedEntity | None = None
    best_key: tuple[float, float, str] | None = None
    for label in sorted({d.label for d in detections}):
        label_senses = tax.synsets_for_lemma(tax.lemma_for_label(label))
        if not label_senses:
            logger.warning("detection label %r has no taxonomy sense, skipping", label)
            continue
        top_score = max(d.score for d in detections if d.label == label)
        for qs in query_senses:
            for ls in label_senses:
                try:
                    sim = jcn_similarity(tax, qs, ls, cfg.squashing)
                except NoCommonAncestorError:
                    continue
                key = (sim, top_score, label)
                if best_key is None or key > best_key:
                    best_key = key
                    best = ResolvedEntity(label, sim)
    if best is None or best.similarity < cfg.threshold:
        return None
    return best


def pick_primary_detection(chosen: Sequence[Detection]) -> Detection:
    """Largest box wins; ties go to higher confidence, then leftmost-topmost."""
    if not chosen:
        raise InvalidInputError("at least one detection is required")
    return min(chosen, key=lambda d: (-d.box.area, -d.score, d.box.x, d.box.y))


def semantic_map(
    img_w: int,
    img_h: int,
    chosen: Sequence[Detection],
    sigma: float | None = None,
    norm: NormalizeMode = "max_one",
) -> ScoreMap:
    """Relevance map for the resolved entity's detections.

    The largest box among ``chosen`` becomes a 0/1 mask over the image, the
    mask is Gaussian-smoothed, and the result is normalized (peak 1 by
    default; ``sum_one`` for a unit-mass map). ``sigma=None`` derives the
    smoothing radius from the box (a tenth of its shorter side, clamped to
    [1, 25] px); ``sigma=0`` skips smoothing.
    """
    if img_w <= 0 or img_h <= 0:
        raise InvalidInputError(f"image size must be positive, got {img_w}x{img_h}")
    primary = pick_primary_detection(chosen)
    if not primary.box.within(img_w, img_h):
        raise InvalidInputError(f"detection box {primary.box} lies outside {img_w}x{img_h}")

    mask = np.zeros((img_h, img_w), dtype=np.float64)
    b = primary.box
    mask[b.y : b.bottom, b.x : b.right] = 1.0
    m = ScoreMap(mask)

    if sigma is None:
        sigma = min(max(SIGMA_BOX_FRACTION * min(b.w, b.h), SIGMA_MIN_PX), SIGMA_MAX_PX)
    if sigma > 0:
        m = gaussian_smooth(m, sigma)
    return normalize(m, norm)


def load_taxonomy(path: str | Path) -> Taxonomy:
    """Load and validate a taxonomy JSON document."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise TaxonomyError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or "synsets" not in doc:
        raise TaxonomyError(f"{path}: taxonomy document needs a 'synsets' list")
    synsets = []
    for entry in doc["synsets"]:
        try:
            synsets.append(
                Synset(
                    id=str(entry["id"]),
                    lemmas=tuple(str(l) for l in entry["lemmas"]),
                    parents=tuple(str(p) for p in entry.get("parents", [])),
                    ic=float(entry["ic"]),
                )
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise TaxonomyError(f"{path}: malformed synset entry {entry!r}: {exc}") from exc
    return Taxonomy(synsets, doc.get("label_map", {}))


@lru_cache(maxsize=1)
def bundled_taxonomy() -> Taxonomy:
    """The taxonomy shipped with the package (detector-style labels over a small hierarchy)."""
    return load_taxonomy(Path(__file__).parent / "data" / "taxonomy_coco.json")


def load_detections(path: str | Path) -> DetectionDocument:
    """Load and validate a detection JSON document."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise InvalidInputError(f"{path}: not valid JSON: {exc}") from exc
    try:
        width = int(doc["width"])
        height = int(doc["height"])
        image_id = str(doc["image_id"])
        raw = doc["detections"]
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidInputError(f"{path}: malformed detection document: {exc}") from exc
    if width <= 0 or height <= 0:
        raise InvalidInputError(f"{path}: image size must be positive, got {width}x{height}")
    detections = []
    for entry in raw:
        try:
            box = Rect(
                int(entry["box"]["x"]),
                int(entry["box"]["y"]),
                int(entry["box"]["w"]),
                int(entry["box"]["h"]),
            )
            det = Detection(str(entry["label"]), float(entry["score"]), box)
        except (KeyError, TypeError, ValueError) as exc:
            raise InvalidInputError(f"{path}: malformed detection {entry!r}: {exc}") from exc
        if not box.within(width, height):
            raise InvalidInputError(f"{path}: detection box {box} outside {width}x{height}")
        detections.append(det)
    return DetectionDocument(image_id, width, height, tuple(detections))


def dump_detections(doc: DetectionDocument) -> str:
    """Serialize a detection document to canonical JSON."""
    payload = {
        "image_id": doc.image_id,
        "width": doc.width,
        "height": doc.height,
        "detections": [
            {
                "label": d.label,
                "score": d.score,
                "box": {"x": d.box.x, "y": d.box.y, "w": d.box.w, "h": d.box.h},
            }
            for d in doc.detections
        ],
    }
    return json.dumps(payload, indent=2) + "\n"
