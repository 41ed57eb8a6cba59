"""Command-line entry points.

``semcrop crop`` crops one image from precomputed evidence, ``semcrop eval``
runs the IOU benchmark over a manifest, and ``semcrop serve-annotate`` starts
the annotation HTTP service. All commands are reproducible: the same inputs
and flags produce the same primary outputs.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from PIL import Image, ImageDraw

from .annotation_server import AnnotationService, load_task_manifest, make_server
from .cropper import (
    CandidateConfig,
    CombineWeights,
    DEFAULT_SCALE_FRACTIONS,
    best_crops,
    default_stride,
)
from .datasets import AnnotationStore, load_manifest
from .errors import SemcropError
from .evaluation import (
    EvalConfig,
    EvidenceDir,
    dump_report,
    evaluate,
    format_comparison,
    format_report,
)
from .geometry import AspectRatio
from .maps import ScoreMap, read_map
from .aesthetics import aesthetic_map, read_classifier_head, read_feature_stack
from .semantics import (
    EntityQuery,
    ResolutionConfig,
    bundled_taxonomy,
    load_detections,
    load_taxonomy,
    resolve_entity,
    semantic_map,
)


def _add_engine_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--wa", type=float, default=1.0, help="aesthetic map weight")
    parser.add_argument("--ws", type=float, default=1.0, help="semantic map weight")
    parser.add_argument("--ratio", default="1:1", help="crop aspect ratio as N:D")
    parser.add_argument("--stride", type=int, default=0,
                        help="window spacing in px (default: longest side / 40)")
    parser.add_argument("--scales", default=",".join(str(f) for f in DEFAULT_SCALE_FRACTIONS),
                        help="comma-separated window scale fractions in (0, 1]")
    parser.add_argument("--threshold", type=float, default=0.1,
                        help="entity resolution similarity threshold")
    parser.add_argument("--taxonomy", help="taxonomy JSON (default: bundled)")


def _candidate_config(args, img_w: int, img_h: int) -> CandidateConfig:
    aspect = AspectRatio.parse(args.ratio)
    stride = args.stride if args.stride > 0 else default_stride(img_w, img_h)
    scales = tuple(sorted(float(s) for s in args.scales.split(",") if s.strip()))
    return CandidateConfig(aspect, stride, scales)


def _taxonomy(args):
    return load_taxonomy(args.taxonomy) if args.taxonomy else bundled_taxonomy()


def _load_aesthetic_evidence(args, image_id: str, width: int, height: int) -> ScoreMap | None:
    if args.amap:
        m = read_map(args.amap)
        if (m.width, m.height) != (width, height):
            raise SemcropError(
                f"{args.amap} is {m.width}x{m.height} but the image is {width}x{height}"
            )
        return m
    if args.features and args.head:
        fs = read_feature_stack(args.features)
        head = read_classifier_head(args.head)
        return aesthetic_map(fs, head, width, height)
    if args.evidence:
        return EvidenceDir(args.evidence).aesthetic_map_for(image_id, width, height)
    return None


def cmd_crop(args) -> int:
    image = Image.open(args.image)
    width, height = image.size
    image_id = Path(args.image).stem

    weights = CombineWeights(args.wa, args.ws)
    cfg = _candidate_config(args, width, height)

    a = None
    if weights.aesthetic > 0:
        a = _load_aesthetic_evidence(args, image_id, width, height)
        if a is None:
            print("error: no aesthetic evidence (--amap, --features/--head, or --evidence)",
                  file=sys.stderr)
            return 2
    else:
        a = ScoreMap.constant(width, height, 0.0)

    s = None
    if args.entity and weights.semantic > 0:
        s = _semantic_from_flags(args, image_id, width, height)
        if s is None and args.strict:
            return 2

    try:
        crops = best_crops(a, s, weights, cfg, n=args.top)
    except SemcropError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if not crops:
        print("error: no candidate window of the requested ratio fits the image",
              file=sys.stderr)
        return 2

    for rank, crop in enumerate(crops, 1):
        r = crop.rect
        print(f"{rank}\tx={r.x}\ty={r.y}\tw={r.w}\th={r.h}\tscore={crop.score:.6f}")

    if args.save_crops:
        out_dir = Path(args.save_crops)
        out_dir.mkdir(parents=True, exist_ok=True)
        for rank, crop in enumerate(crops, 1):
            r = crop.rect
            image.crop((r.x, r.y, r.right, r.bottom)).save(out_dir / f"{image_id}_crop{rank}.png")
    if args.overlay:
        overlay = image.convert("RGB")
        draw = ImageDraw.Draw(overlay)
        for crop in reversed(crops):
            r = crop.rect
            draw.rectangle((r.x, r.y, r.right - 1, r.bottom - 1), outline=(0, 255, 0), width=2)
        overlay.save(args.overlay)
    return 0


def _semantic_from_flags(args, image_id: str, width: int, height: int) -> ScoreMap | None:
    """Build the relevance map for --entity, or fall back with a warning."""
    det_path = args.detections
    if not det_path and args.evidence:
        candidate = Path(args.evidence) / f"{image_id}.det"
        det_path = str(candidate) if candidate.exists() else None
    if not det_path:
        print(f"warning: entity {args.entity!r} given but no detections found; "
              "cropping on aesthetics only", file=sys.stderr)
        return None
    doc = load_detections(det_path)
    if (doc.width, doc.height) != (width, height):
        print(f"error: detections are for {doc.width}x{doc.height}, image is "
              f"{width}x{height}", file=sys.stderr)
        return None
    resolution = ResolutionConfig(threshold=args.threshold)
    resolved = resolve_entity(_taxonomy(args), EntityQuery(args.entity),
                              list(doc.detections), resolution)
    if resolved is None:
        print(f"warning: entity {args.entity!r} did not resolve above threshold "
              f"{args.threshold}; cropping on aesthetics only", file=sys.stderr)
        return None
    chosen = [d for d in doc.detections if d.label == resolved.label]
    print(f"entity {args.entity!r} resolved to detector label {resolved.label!r} "
          f"(similarity {resolved.similarity:.4f})", file=sys.stderr)
    return semantic_map(width, height, chosen)


def cmd_eval(args) -> int:
    manifest_path = Path(args.manifest)
    if not manifest_path.exists():
        print(f"error: manifest {manifest_path} does not exist", file=sys.stderr)
        return 2
    manifest = load_manifest(manifest_path, args.kind)
    evidence = EvidenceDir(args.evidence)
    taxonomy = _taxonomy(args)

    any_image = manifest.images()[0]
    candidate_cfg = _candidate_config(args, any_image.width, any_image.height)
    resolution = ResolutionConfig(threshold=args.threshold)

    runs: dict[str, tuple[float, float]] = {}
    if args.sweep:
        runs = {"aesthetic model (ws=0, wa=1)": (1.0, 0.0),
                "semantic model (wa=0, ws=1)": (0.0, 1.0),
                "combined model (wa=1, ws=1)": (1.0, 1.0)}
    else:
        runs = {"run": (args.wa, args.ws)}

    reports = {}
    out_dir = Path(args.out) if args.out else None
    for name, (wa, ws) in runs.items():
        cfg = EvalConfig(
            weights=CombineWeights(wa, ws),
            candidates=candidate_cfg,
            protocol=args.protocol,
            resolution=resolution,
            include_failures_as_zero=args.include_failures_as_zero,
        )
        report = evaluate(manifest, evidence, cfg, taxonomy)
        reports[name] = report
        if out_dir:
            out_dir.mkdir(parents=True, exist_ok=True)
            out_path = out_dir / f"report_wa{wa:g}_ws{ws:g}.json"
            out_path.write_text(dump_report(report), encoding="utf-8")
            print(f"wrote {out_path}", file=sys.stderr)
        if not args.sweep:
            print(format_report(report))
    if args.sweep:
        print(format_comparison(reports))
    return 0


def cmd_serve_annotate(args) -> int:
    tasks = load_task_manifest(args.tasks)
    images = {t.image.id: t.image for t in tasks}
    store = AnnotationStore(args.store, images=images)
    service = AnnotationService(args.images, tasks, store,
                                annotations_per_task=args.per_task)
    host, _, port_text = args.addr.rpartition(":")
    try:
        server = make_server((host or "127.0.0.1", int(port_text)), service,
                             ui_dir=args.ui_dir)
    except OSError as exc:
        print(f"error: cannot bind {args.addr}: {exc}", file=sys.stderr)
        return 2
    print(f"annotation service on http://{args.addr} "
          f"({len(tasks)} tasks, store {args.store})", file=sys.stderr)
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass
    finally:
        server.server_close()
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="semcrop",
                                     description="Semantically targeted image cropping")
    sub = parser.add_subparsers(dest="command", required=True)

    crop = sub.add_parser("crop", help="crop one image from precomputed evidence")
    crop.add_argument("image", help="PNG or PPM image to crop")
    crop.add_argument("--amap", help="MAP1 aesthetic map for the image")
    crop.add_argument("--features", help="FST1 feature stack")
    crop.add_argument("--head", help="HEAD1 classifier head")
    crop.add_argument("--evidence", help="directory with <id>.amap/.fst/.head/.det files")
    crop.add_argument("--detections", help="detection document JSON")
    crop.add_argument("--entity", help="entity to keep in the crop")
    crop.add_argument("--top", type=int, default=1, help="number of crops to output")
    crop.add_argument("--strict", action="store_true",
                      help="fail instead of falling back when the entity cannot be used")
    crop.add_argument("--save-crops", help="directory for cropped images")
    crop.add_argument("--overlay", help="write the image with crop outlines here")
    _add_engine_flags(crop)
    crop.set_defaults(func=cmd_crop)

    ev = sub.add_parser("eval", help="run the IOU benchmark over a manifest")
    ev.add_argument("--manifest", required=True, help="dataset manifest JSON")
    ev.add_argument("--kind", choices=["aesthetic", "semantic"], default="semantic")
    ev.add_argument("--evidence", required=True,
                    help="directory with <id>.amap/.fst/.head/.det files")
    ev.add_argument("--protocol", choices=["per_pair", "best_of_n"], default="per_pair")
    ev.add_argument("--out", help="directory for JSON reports")
    ev.add_argument("--sweep", action="store_true",
                    help="run aesthetic, semantic, and combined configurations")
    ev.add_argument("--include-failures-as-zero", action="store_true",
                    help="count failed items as IOU 0 instead of skipping them")
    _add_engine_flags(ev)
    ev.set_defaults(func=cmd_eval)

    serve = sub.add_parser("serve-annotate", help="run the annotation HTTP service")
    serve.add_argument("--images", required=True, help="directory holding the task images")
    serve.add_argument("--tasks", required=True, help="task manifest JSON")
    serve.add_argument("--store", required=True, help="annotation store JSONL path")
    serve.add_argument("--addr", default="127.0.0.1:8765", help="HOST:PORT to bind")
    serve.add_argument("--per-task", type=int, default=4,
                       help="annotations collected per task before it closes")
    serve.add_argument("--ui-dir", help="serve this directory as the web UI root")
    serve.set_defaults(func=cmd_serve_annotate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except SemcropError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
