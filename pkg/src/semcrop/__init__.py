"""Semantically targeted image cropping.

Fuses a per-pixel aesthetic map (class activation over an ingested feature
stack) with a per-pixel relevance map (object detections resolved against an
entity query through a concept taxonomy), scores sliding-window crop
candidates on the fused map, and ships the IOU benchmark harness and crop
annotation service used to evaluate the results.
"""

from .aesthetics import (
    AvaRating,
    ClassifierHead,
    FeatureStack,
    LossParams,
    aesthetic_map,
    ava_label,
    class_activation_map,
    gap_classify,
    gap_logit,
    read_ava_ratings,
    read_classifier_head,
    read_feature_stack,
    weighted_cross_entropy,
    write_classifier_head,
    write_feature_stack,
)
from .cropper import (
    CandidateConfig,
    CombineWeights,
    RankedCrop,
    best_crops,
    candidates,
    combine,
    default_candidate_config,
    default_stride,
    rank_candidates,
    score_crop,
)
from .datasets import (
    AnnotationRecord,
    AnnotationStore,
    CroppingRecordSet,
    ImageInfo,
    Manifest,
    SemanticRecord,
    dump_manifest,
    export_semantic_manifest,
    load_manifest,
    parse_manifest,
)
from .errors import (
    AnnotationError,
    DegenerateMapError,
    DuplicateAnnotationError,
    InvalidInputError,
    LossDomainError,
    ManifestError,
    NoCommonAncestorError,
    SemcropError,
    TaxonomyError,
)
from .evaluation import (
    EvalConfig,
    EvalItem,
    EvalReport,
    EvidenceDir,
    best_match_iou,
    dump_report,
    evaluate,
    format_comparison,
    format_report,
)
from .geometry import SQUARE, AspectRatio, Rect, intersect, iou, matches_ratio
from .losses import FocalParams, focal_loss, focal_loss_mean, true_class_probability
from .maps import (
    IntegralMap,
    ScoreMap,
    gaussian_smooth,
    integral,
    normalize,
    read_map,
    resize_bilinear,
    window_sum,
    write_map,
)
from .semantics import (
    Detection,
    DetectionDocument,
    EntityQuery,
    ResolutionConfig,
    ResolvedEntity,
    Synset,
    Taxonomy,
    bundled_taxonomy,
    dump_detections,
    jcn_similarity,
    load_detections,
    load_taxonomy,
    resolve_entity,
    semantic_map,
    senses,
)

__version__ = "0.1.0"
