"""Command-line interface: pseudo-label generation, suppression, CRF
refinement, evaluation, loss inspection, demo edge maps, and the annotation
service."""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import crf, losses, metrics, nss, report
from .config import DatasetManifest, InputOutputFailure, PipelineConfig, ValidationFailure
from .floodfill import (
    AnnotatedImage,
    AnnotationFormatError,
    EmptyFillError,
    Point,
    PointAnnotation,
    generate_pseudo_label_detailed,
    load_annotations,
)
from .imaging import (
    GrayMap,
    RasterImage,
    load_gray,
    load_mask,
    load_rgb,
    load_trimap,
    resize_gray,
    save_gray,
    save_trimap,
)

log = logging.getLogger("pointsal")

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_IO = 2


def demo_edge_map(image: RasterImage) -> GrayMap:
    """Gradient-magnitude fallback edge map: 3x3 central differences on
    luminance, min-max normalized. A stand-in so demos run without an
    external edge detector; not a learned detector."""
    rgb = image.rgb.astype(np.float64)
    lum = 0.299 * rgb[..., 0] + 0.587 * rgb[..., 1] + 0.114 * rgb[..., 2]
    if image.height < 2 or image.width < 2:
        return GrayMap(np.zeros_like(lum))
    gy, gx = np.gradient(lum)
    mag = np.hypot(gx, gy)
    span = mag.max() - mag.min()
    if span > 0:
        mag = (mag - mag.min()) / span
    else:
        mag = np.zeros_like(mag)
    return GrayMap(mag)


def _scale_point(p: Point, src_w: int, src_h: int, dst: int) -> Point:
    x = min(dst - 1, max(0, int(round((p.x + 0.5) * dst / src_w - 0.5))))
    y = min(dst - 1, max(0, int(round((p.y + 0.5) * dst / src_h - 0.5))))
    return Point(x, y)


# ---------------------------------------------------------------------------
# Per-image workers (top-level so process pools can pickle them).


def _pseudo_label_one(task: dict) -> dict:
    image_id = task["id"]
    config: PipelineConfig = task["config"]
    edge_path = Path(task["edge_path"])
    if not edge_path.is_file():
        return {"id": image_id, "skip": "missing edge map"}
    edges = load_gray(edge_path)
    record: AnnotatedImage = task["record"]
    if (edges.height, edges.width) != (record.height, record.width):
        return {
            "id": image_id,
            "skip": f"edge map is {edges.width}x{edges.height}, "
            f"annotation says {record.width}x{record.height}",
        }
    annotation = record.annotation()
    dims = (record.height, record.width)
    if config.resize:
        n = config.resize
        edges = resize_gray(edges, n, n)
        annotation = PointAnnotation(
            annotation.image_id,
            [_scale_point(p, record.width, record.height, n) for p in annotation.foreground_points],
            _scale_point(annotation.background_point, record.width, record.height, n)
            if annotation.background_point
            else None,
        )
        dims = (n, n)
    try:
        result = generate_pseudo_label_detailed(dims, edges, annotation, config.mask_config())
    except EmptyFillError as exc:
        return {"id": image_id, "skip": f"empty fill: {exc}"}
    save_trimap(result.trimap, Path(task["out_path"]))
    return {
        "id": image_id,
        "radius": result.radius,
        "fg_pixels": int(result.trimap.fg_mask().count()),
        "bg_pixels": int(result.trimap.bg_mask().count()),
        "nudged_seeds": [
            {"from": {"x": s.requested.x, "y": s.requested.y}, "to": {"x": s.used.x, "y": s.used.y}}
            for s in result.nudged_seeds()
        ],
        "dropped_seeds": [
            {"x": s.requested.x, "y": s.requested.y} for s in result.dropped_seeds()
        ],
    }


def _nss_one(task: dict) -> dict:
    image_id = task["id"]
    config: PipelineConfig = task["config"]
    saliency_path = Path(task["saliency_path"])
    if not saliency_path.is_file():
        return {"id": image_id, "skip": "missing saliency map"}
    saliency = load_gray(saliency_path)
    record: AnnotatedImage = task["record"]
    if task["use_crf"]:
        image_path = Path(task["image_path"])
        if not image_path.is_file():
            return {"id": image_id, "skip": "missing image (needed for CRF)"}
        image = load_rgb(image_path)
        if (image.height, image.width) != (saliency.height, saliency.width):
            return {"id": image_id, "skip": "image/saliency dimension mismatch"}
        saliency = crf.crf_refine(saliency, image, config.crf)
        if task.get("refined_path"):
            save_gray(saliency, Path(task["refined_path"]))
    fg_points = record.annotation().foreground_points
    sup = nss.suppression_report(saliency, fg_points, config.nss)
    kept = nss.extract_seeded_components(saliency, fg_points, config.nss)
    trimap = nss.build_second_round_label(kept, config.nss)
    save_trimap(trimap, Path(task["out_path"]))
    return {
        "id": image_id,
        "fg_pixels": int(trimap.fg_mask().count()),
        "components_total": sup.components_total,
        "components_removed": sup.components_removed,
        "dropped_seeds": [{"x": p.x, "y": p.y} for p in sup.dropped_seeds],
    }


def _crf_one(task: dict) -> dict:
    image_id = task["id"]
    config: PipelineConfig = task["config"]
    saliency = load_gray(task["saliency_path"])
    image = load_rgb(task["image_path"])
    if (image.height, image.width) != (saliency.height, saliency.width):
        return {"id": image_id, "skip": "image/saliency dimension mismatch"}
    refined = crf.crf_refine(saliency, image, config.crf)
    save_gray(refined, Path(task["out_path"]))
    return {"id": image_id}


def _run_tasks(worker, tasks: list[dict], jobs: int) -> list[dict]:
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(worker, tasks))
    else:
        rows = [worker(t) for t in tasks]
    return sorted(rows, key=lambda r: r["id"])


def _write_report(rows: list[dict], path: Path, extra: dict | None = None) -> None:
    done = [r for r in rows if "skip" not in r]
    skipped = [{"id": r["id"], "reason": r["skip"]} for r in rows if "skip" in r]
    doc = {"images": done, "skipped": skipped}
    if extra:
        doc.update(extra)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    for entry in skipped:
        log.warning("skipped %s: %s", entry["id"], entry["reason"])


# ---------------------------------------------------------------------------
# Subcommands.


def _load_manifest(args, **needs) -> DatasetManifest:
    if getattr(args, "manifest", None):
        manifest = DatasetManifest.load(args.manifest)
    else:
        manifest = DatasetManifest(
            images_dir=Path(args.images) if args.images else None,
            edges_dir=Path(args.edges) if getattr(args, "edges", None) else None,
            annotations_file=Path(args.annotations) if getattr(args, "annotations", None) else None,
            gt_dir=Path(args.gt) if getattr(args, "gt", None) else None,
        )
    # Explicit flags override manifest entries.
    if getattr(args, "manifest", None):
        if args.images:
            manifest.images_dir = Path(args.images)
        if getattr(args, "edges", None):
            manifest.edges_dir = Path(args.edges)
        if getattr(args, "annotations", None):
            manifest.annotations_file = Path(args.annotations)
        if getattr(args, "gt", None):
            manifest.gt_dir = Path(args.gt)
    if manifest.images_dir is None:
        raise ValidationFailure("an images directory is required (--images or --manifest)")
    manifest.validate(**needs)
    return manifest


def _load_config(args) -> PipelineConfig:
    config = PipelineConfig.load(args.config) if args.config else PipelineConfig()
    overrides: dict = {}
    if getattr(args, "gamma", None) is not None:
        overrides["gamma"] = args.gamma
    if getattr(args, "edge_threshold", None) is not None:
        overrides["edge_threshold"] = args.edge_threshold
    if getattr(args, "resize", None) is not None:
        overrides["resize"] = args.resize
    if overrides:
        doc = config.to_dict()
        doc.update(overrides)
        config = PipelineConfig.from_dict(doc)
    return config


def _load_records(manifest: DatasetManifest) -> list[AnnotatedImage]:
    records = load_annotations(manifest.annotations_file)
    known = set(manifest.image_ids())
    for rec in records:
        if rec.image_id not in known:
            raise ValidationFailure(
                f"annotation references unknown image id {rec.image_id!r} "
                f"(not found in {manifest.images_dir})"
            )
    return records


def cmd_pseudo_label(args) -> int:
    manifest = _load_manifest(args, need_edges=True, need_annotations=True)
    config = _load_config(args)
    records = _load_records(manifest)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if not records:
        log.warning("annotation list is empty; nothing to do")
        _write_report([], out_dir / "pseudo_label_report.json")
        return EXIT_OK
    tasks = []
    for rec in records:
        if not rec.complete():
            tasks.append({"id": rec.image_id, "record": rec, "skip": "incomplete annotation"})
            continue
        tasks.append(
            {
                "id": rec.image_id,
                "record": rec,
                "config": config,
                "edge_path": str(manifest.edge_path(rec.image_id)),
                "out_path": str(out_dir / f"{rec.image_id}.png"),
            }
        )
    runnable = [t for t in tasks if "skip" not in t]
    rows = _run_tasks(_pseudo_label_one, runnable, args.jobs)
    rows += [{"id": t["id"], "skip": t["skip"]} for t in tasks if "skip" in t]
    rows.sort(key=lambda r: r["id"])
    _write_report(rows, out_dir / "pseudo_label_report.json")
    log.info("pseudo-label: %d written, %d skipped", sum("skip" not in r for r in rows),
             sum("skip" in r for r in rows))
    return EXIT_OK


def cmd_nss(args) -> int:
    manifest = _load_manifest(args, need_annotations=True)
    config = _load_config(args)
    use_crf = args.crf == "on"
    records = _load_records(manifest)
    saliency_dir = Path(args.saliency)
    if not saliency_dir.is_dir():
        raise InputOutputFailure(f"saliency directory not found: {saliency_dir}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    refined_dir = Path(args.save_refined) if args.save_refined else None
    if refined_dir:
        refined_dir.mkdir(parents=True, exist_ok=True)
    tasks = []
    for rec in records:
        if not rec.foreground_points:
            tasks.append({"id": rec.image_id, "skip": "no foreground points"})
            continue
        tasks.append(
            {
                "id": rec.image_id,
                "record": rec,
                "config": config,
                "use_crf": use_crf,
                "saliency_path": str(saliency_dir / f"{rec.image_id}.png"),
                "image_path": str(manifest.image_path(rec.image_id)),
                "refined_path": str(refined_dir / f"{rec.image_id}.png") if refined_dir else None,
                "out_path": str(out_dir / f"{rec.image_id}.png"),
            }
        )
    runnable = [t for t in tasks if "skip" not in t]
    rows = _run_tasks(_nss_one, runnable, args.jobs)
    rows += [t for t in tasks if "skip" in t]
    rows.sort(key=lambda r: r["id"])
    _write_report(rows, out_dir / "nss_report.json", extra={"crf": args.crf})
    return EXIT_OK


def cmd_crf(args) -> int:
    manifest = _load_manifest(args)
    config = _load_config(args)
    saliency_dir = Path(args.saliency)
    if not saliency_dir.is_dir():
        raise InputOutputFailure(f"saliency directory not found: {saliency_dir}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    tasks = []
    for path in sorted(saliency_dir.glob("*.png")):
        image_path = manifest.image_path(path.stem)
        if not image_path.is_file():
            tasks.append({"id": path.stem, "skip": "missing image"})
            continue
        tasks.append(
            {
                "id": path.stem,
                "config": config,
                "saliency_path": str(path),
                "image_path": str(image_path),
                "out_path": str(out_dir / path.name),
            }
        )
    runnable = [t for t in tasks if "skip" not in t]
    rows = _run_tasks(_crf_one, runnable, args.jobs)
    rows += [t for t in tasks if "skip" in t]
    rows.sort(key=lambda r: r["id"])
    _write_report(rows, out_dir / "crf_report.json")
    return EXIT_OK


def cmd_eval(args) -> int:
    config = _load_config(args)
    pred_dir, gt_dir = Path(args.pred), Path(args.gt)
    if not pred_dir.is_dir():
        raise InputOutputFailure(f"prediction directory not found: {pred_dir}")
    if not gt_dir.is_dir():
        raise InputOutputFailure(f"ground-truth directory not found: {gt_dir}")
    options = config.metrics
    if args.beta_sq is not None:
        options = metrics.MetricOptions(
            beta_sq=args.beta_sq,
            normalize_pred=options.normalize_pred,
            mean_f_mode=options.mean_f_mode,
        )
    result = metrics.evaluate_dataset(pred_dir, gt_dir, options, jobs=args.jobs)
    paths = report.write_eval_reports(result, args.out, beta_sq=options.beta_sq)
    log.info(
        "eval: f_max=%.4f f_mean=%.4f mae=%.4f s_measure=%.4f (%d images, %d skipped)",
        result.f_max, result.f_mean, result.mae, result.s_measure,
        len(result.per_image), len(result.skipped),
    )
    print(Path(paths["table"]).read_text(), end="")
    return EXIT_OK


def cmd_losses(args) -> int:
    config = _load_config(args)
    saliency = load_gray(args.saliency)
    trimap = load_trimap(args.trimap)
    image = load_rgb(args.image)
    edge_pred = load_gray(args.edge_pred)
    edge_gt = load_mask(args.edge_gt)
    try:
        value = losses.total_loss(
            (edge_pred, edge_gt), (saliency, trimap), image, config.gated_crf, config.loss_weights
        )
    except ValueError as exc:
        raise ValidationFailure(str(exc)) from exc
    doc = {
        "bce": value.bce,
        "partial_bce": value.partial_bce,
        "gated_crf": value.gated_crf,
        "weights": [config.loss_weights.alpha1, config.loss_weights.alpha2, config.loss_weights.alpha3],
        "total": value.scalar,
    }
    print(json.dumps(doc, indent=2))
    if args.out:
        Path(args.out).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    return EXIT_OK


def cmd_demo_edges(args) -> int:
    images_dir = Path(args.images)
    if not images_dir.is_dir():
        raise InputOutputFailure(f"images directory not found: {images_dir}")
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    for path in sorted(images_dir.glob("*.png")):
        try:
            image = load_rgb(path)
        except OSError as exc:
            rows.append({"id": path.stem, "skip": f"unreadable: {exc}"})
            continue
        edge = demo_edge_map(image)
        save_gray(edge, out_dir / path.name)
        rows.append({"id": path.stem, "max": float(edge.values.max())})
    _write_report(rows, out_dir / "demo_edges_report.json")
    return EXIT_OK


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    manifest = _load_manifest(args)
    config = _load_config(args)
    if manifest.annotations_file is None:
        raise ValidationFailure("serve requires --annotations (created on first save if missing)")
    app = create_app(manifest, config, ui_dir=Path(args.ui) if args.ui else None)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Argument parsing.


def _add_manifest_args(p: argparse.ArgumentParser, gt: bool = False) -> None:
    p.add_argument("--manifest", help="dataset manifest JSON (images/edges/annotations/gt paths)")
    p.add_argument("--images", help="directory of <id>.png images")
    p.add_argument("--edges", help="directory of <id>.png edge maps")
    p.add_argument("--annotations", help="annotations JSON file")
    if gt:
        p.add_argument("--gt", help="directory of <id>.png ground-truth masks")


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="pipeline config JSON; flags override file values")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers (default 1)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pointsal",
        description="Point-supervised saliency pseudo-labeling toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("pseudo-label", help="flood-fill trimaps from points + edge maps")
    _add_manifest_args(p)
    _add_common(p)
    p.add_argument("--out", required=True, help="output directory for trimaps")
    p.add_argument("--gamma", type=float, help="adaptive circle divisor (default 5)")
    p.add_argument("--edge-threshold", dest="edge_threshold", type=float,
                   help="edge barrier threshold on [0,1] maps (default 0.5)")
    p.add_argument("--resize", type=int, help="resize inputs to NxN before processing")
    p.set_defaults(func=cmd_pseudo_label)

    p = sub.add_parser("nss", help="suppress unseeded blobs and build second-round trimaps")
    _add_manifest_args(p)
    _add_common(p)
    p.add_argument("--saliency", required=True, help="directory of first-round saliency maps")
    p.add_argument("--out", required=True, help="output directory for trimaps")
    p.add_argument("--crf", choices=["on", "off"], default="on",
                   help="refine saliency with dense CRF first (default on)")
    p.add_argument("--save-refined", dest="save_refined",
                   help="also write CRF-refined maps to this directory")
    p.set_defaults(func=cmd_nss)

    p = sub.add_parser("crf", help="dense CRF refinement of saliency maps")
    _add_manifest_args(p)
    _add_common(p)
    p.add_argument("--saliency", required=True, help="directory of saliency maps")
    p.add_argument("--out", required=True, help="output directory for refined maps")
    p.set_defaults(func=cmd_crf)

    p = sub.add_parser("eval", help="evaluate saliency maps against ground truth")
    _add_common(p)
    p.add_argument("--pred", required=True, help="directory of predicted maps")
    p.add_argument("--gt", required=True, help="directory of ground-truth masks")
    p.add_argument("--out", required=True, help="report output directory")
    p.add_argument("--beta-sq", dest="beta_sq", type=float, help="beta^2 for F (default 0.3)")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("losses", help="evaluate the loss terms on one file triple")
    _add_common(p)
    p.add_argument("--saliency", required=True, help="predicted saliency map PNG")
    p.add_argument("--trimap", required=True, help="trimap pseudo-label PNG")
    p.add_argument("--image", required=True, help="RGB image PNG")
    p.add_argument("--edge-pred", dest="edge_pred", required=True, help="predicted edge map PNG")
    p.add_argument("--edge-gt", dest="edge_gt", required=True, help="edge target PNG")
    p.add_argument("--out", help="also write the report JSON here")
    p.set_defaults(func=cmd_losses)

    p = sub.add_parser("demo-edges", help="gradient-magnitude fallback edge maps")
    _add_common(p)
    p.add_argument("--images", required=True, help="directory of <id>.png images")
    p.add_argument("--out", required=True, help="output directory for edge maps")
    p.set_defaults(func=cmd_demo_edges)

    p = sub.add_parser("serve", help="run the annotation HTTP service")
    _add_manifest_args(p, gt=True)
    _add_common(p)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8008)
    p.add_argument("--ui", help="static UI bundle directory to serve at /")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv: list[str] | None = None) -> int:
    level = os.environ.get("POINTSAL_LOG", "INFO").upper()
    logging.basicConfig(level=getattr(logging, level, logging.INFO),
                        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValidationFailure, AnnotationFormatError, ValueError) as exc:
        log.error("%s", exc)
        return EXIT_VALIDATION
    except (InputOutputFailure, OSError) as exc:
        log.error("%s", exc)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
