"""Command-line entry point.

One binary, six subcommands: annotate-objects, make-scenes, eval,
cloud-seg, grasp-point, report. Exit codes: 0 success, 2 usage error,
1 runtime error (the failing input is named on stderr). Every command
that writes an output directory drops a run_config.json there with the
effective settings for provenance.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__, cloud, grasp, kernels, metrics, objprep, report, scenegen
from .core import CameraIntrinsics, category_name, load_depth, load_rgb
from .errors import ClutterkitError
from .rng import Rng

log = logging.getLogger("clutterkit")

KNOWN_SCENE_KEYS = {
    "objects", "backgrounds", "n_scenes", "instances_per_scene", "seed",
    "out", "augment", "jitter", "flip_prob", "visibility_floor",
    "scene_size", "rotate", "jobs",
}


def _parse_int_range(text: str) -> tuple[int, int]:
    lo, _, hi = text.partition("..")
    lo = int(lo)
    hi = int(hi) if hi else lo
    return lo, hi


def _parse_float_range(text: str) -> tuple[float, float]:
    lo, _, hi = text.partition("..")
    lo = float(lo)
    hi = float(hi) if hi else lo
    return lo, hi


def _parse_size(text: str) -> tuple[int, int]:
    w, _, h = text.partition("x")
    return int(w), int(h)


def _load_config_file(path: str) -> dict:
    """JSON object or key=value lines; unknown keys are rejected."""
    text = Path(path).read_text()
    stripped = text.lstrip()
    if stripped.startswith("{"):
        data = json.loads(text)
        if not isinstance(data, dict):
            raise ValueError(f"{path}: config must be a JSON object")
    else:
        data = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            data[key.strip()] = value.strip()
    unknown = set(data) - KNOWN_SCENE_KEYS
    if unknown:
        raise ValueError(f"{path}: unknown config keys: {sorted(unknown)}")
    return data


def _write_run_config(out_dir: Path, command: str, settings: dict) -> None:
    payload = {
        "command": command,
        "version": __version__,
        "kernel_backend": kernels.BACKEND,
        "settings": settings,
    }
    out_dir.mkdir(parents=True, exist_ok=True)
    with open(out_dir / "run_config.json", "w") as f:
        json.dump(payload, f, indent=2, sort_keys=True)
        f.write("\n")


def _emit_json(doc: dict, out: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _cmd_annotate_objects(args) -> int:
    manifest = objprep.annotate_directory(
        args.in_dir, args.out, args.category,
        thresh=args.white_thresh, min_area=args.min_area)
    _write_run_config(Path(args.out), "annotate-objects", {
        "in": str(args.in_dir), "out": str(args.out),
        "category": args.category, "white_thresh": args.white_thresh,
        "min_area": args.min_area,
    })
    log.info("annotated %d objects (%d skipped)",
             len(manifest["objects"]), len(manifest["skipped"]))
    return 0


def _resolve_scene_args(args) -> dict:
    """Config-file values fill in flags the user left unset; flags win."""
    config = _load_config_file(args.config) if args.config else {}
    defaults = {
        "objects": None, "backgrounds": None, "n_scenes": 10, "seed": 0,
        "out": None, "instances_per_scene": "10..10", "jitter": "0.5..2.0",
        "flip_prob": 0.5, "visibility_floor": 0.05, "scene_size": "1280x720",
        "augment": False, "rotate": False, "jobs": 1,
    }
    casts = {
        "n_scenes": int, "seed": int, "flip_prob": float,
        "visibility_floor": float, "jobs": int,
        "augment": lambda v: str(v).lower() in ("1", "true", "yes"),
        "rotate": lambda v: str(v).lower() in ("1", "true", "yes"),
    }
    resolved = {}
    for key, default in defaults.items():
        flag_value = getattr(args, key)
        if flag_value is not None:
            resolved[key] = flag_value
        elif key in config:
            raw = config[key]
            resolved[key] = casts.get(key, str)(raw) if isinstance(raw, str) else raw
        else:
            resolved[key] = default
    for required in ("objects", "backgrounds", "out"):
        if not resolved[required]:
            raise ValueError(f"make-scenes: missing required setting {required!r}")
    return resolved


def _cmd_make_scenes(args) -> int:
    settings = _resolve_scene_args(args)
    scene_w, scene_h = _parse_size(settings["scene_size"])
    cfg = scenegen.SynthConfig(
        scene_w=scene_w, scene_h=scene_h,
        n_instances=_parse_int_range(settings["instances_per_scene"]),
        scale_range=_parse_float_range(settings["jitter"]),
        flip_prob=settings["flip_prob"],
        rotate=settings["rotate"],
        visibility_floor=settings["visibility_floor"],
        photometric=settings["augment"],
        geometric=settings["augment"],
    )
    objects = objprep.load_objects(settings["objects"])
    if not objects:
        raise ValueError(f"{settings['objects']}: manifest lists no objects")
    bg_paths = sorted(Path(settings["backgrounds"]).glob("*.png"))
    if not bg_paths:
        raise ValueError(f"{settings['backgrounds']}: no background PNGs")
    backgrounds = [(p.stem, load_rgb(p)) for p in bg_paths]
    scenes = scenegen.generate_scenes(
        objects, backgrounds, cfg, settings["seed"], settings["n_scenes"],
        jobs=settings["jobs"])
    scenegen.emit_dataset(scenes, settings["out"])
    _write_run_config(Path(settings["out"]), "make-scenes", settings)
    log.info("wrote %d scenes to %s", len(scenes), settings["out"])
    return 0


def _cmd_eval(args) -> int:
    gts = metrics.load_ground_truth(args.gt)
    dets = metrics.load_predictions(args.pred, args.gt)
    rep = metrics.evaluate(dets, gts, args.mode)
    doc = rep.to_dict()
    _emit_json(doc, args.out)
    if args.pr_curves:
        out_base = Path(args.out or "report.json")
        for t in (0.5, 0.75):
            curve = metrics.pr_curve(dets, gts, t, args.mode)
            stem = out_base.with_suffix("")
            Path(f"{stem}.pr_iou{int(t * 100)}.csv").write_text(curve.to_csv())
            with open(f"{stem}.pr_iou{int(t * 100)}.json", "w") as f:
                json.dump(curve.to_dict(), f, indent=2)
                f.write("\n")
    log.info("overall AP@[0.5:0.95] = %.1f, AR = %.1f",
             rep.overall["ap"], rep.overall["ar"])
    return 0


def _load_pred_detections(path: str, scene_id: str = "scene") -> list[metrics.Detection]:
    """Predictions for a single scene: bare list with bbox/score/mask."""
    from . import rle
    from .core import Bbox

    with open(path) as f:
        doc = json.load(f)
    records = doc["annotations"] if isinstance(doc, dict) else doc
    dets = []
    for rec in records:
        mask = rle.coco_to_mask(rec["segmentation"]) if "segmentation" in rec else None
        x, y, w, h = rec["bbox"]
        dets.append(metrics.Detection(
            scene_id=scene_id, category=int(rec["category_id"]),
            confidence=float(rec["score"]),
            bbox=Bbox(int(x), int(y), max(1, int(w)), max(1, int(h))),
            mask=mask))
    return dets


def _cmd_cloud_seg(args) -> int:
    depth = load_depth(args.depth)
    intr = CameraIntrinsics.load(args.intrinsics)
    full = cloud.backproject(depth, intr)
    plane_doc = None
    if args.method in ("kmeans", "dbscan"):
        working = full
        if not args.no_plane_removal:
            working, plane = cloud.remove_plane(
                full, dist_thresh=args.plane_dist, rng=Rng(args.seed))
            plane_doc = {"a": plane.a, "b": plane.b, "c": plane.c, "d": plane.d}
        if args.method == "kmeans":
            labels = cloud.kmeans(working, args.k, rng=Rng(args.seed).child(1))
        else:
            labels = cloud.dbscan(working, eps=args.eps, min_pts=args.min_pts)
        out_cloud = working
    elif args.method == "masks":
        if not args.pred:
            raise ValueError("cloud-seg --method masks needs --pred")
        dets = _load_pred_detections(args.pred)
        order = sorted(range(len(dets)), key=lambda i: (-dets[i].confidence, i))
        labels = np.full(len(full), cloud.NOISE, dtype=np.int32)
        cluster = 0
        for di in order:
            det = dets[di]
            if det.mask is None:
                raise ValueError(f"prediction {di} has no mask")
            u = full.pixel_ref[:, 0]
            v = full.pixel_ref[:, 1]
            member = det.mask[v, u] & (labels == cloud.NOISE)
            if member.any():
                labels[member] = cluster
                cluster += 1
        out_cloud = full
    else:
        raise ValueError(f"unknown method {args.method!r}")

    sizes = np.bincount(labels[labels >= 0]) if (labels >= 0).any() else np.array([], dtype=int)
    doc = {
        "method": args.method,
        "n_points": int(len(out_cloud)),
        "n_clusters": int(sizes.size),
        "noise_points": int((labels == cloud.NOISE).sum()),
        "plane": plane_doc,
        "clusters": [
            {
                "id": cid,
                "size": int(sizes[cid]),
                "centroid": [float(c) for c in out_cloud.points[labels == cid].mean(axis=0)],
            }
            for cid in range(sizes.size)
        ],
        "labels": [int(l) for l in labels],
    }
    _emit_json(doc, args.out)
    if args.xyz_out:
        cloud.save_xyz(args.xyz_out, out_cloud, labels)
    return 0


def _cmd_grasp_point(args) -> int:
    if bool(args.cloud) == bool(args.depth):
        raise ValueError("grasp-point needs exactly one of --cloud or --depth")
    if args.depth:
        intr = CameraIntrinsics.load(args.intrinsics)
        pc = cloud.backproject(load_depth(args.depth), intr)
    else:
        pc, _ = cloud.load_xyz(args.cloud)

    target_doc = None
    instance = pc
    if args.pred:
        dets = _load_pred_detections(args.pred)
        target = grasp.select_target(dets)
        target_doc = {
            "category": category_name(target.category),
            "category_id": target.category,
            "confidence": target.confidence,
        }
        if target.mask is not None:
            instance = cloud.mask_to_cloud(pc, target.mask)

    cfg_kwargs = {"region_radius": args.radius, "normal_k": args.normal_k}
    if args.extrinsics:
        with open(args.extrinsics) as f:
            ext = json.load(f)
        if "rotation" in ext:
            cfg_kwargs["rotation"] = np.array(ext["rotation"], dtype=np.float64)
        if "vertical" in ext:
            cfg_kwargs["vertical"] = np.array(ext["vertical"], dtype=np.float64)
    candidate = grasp.grasp_point(instance, grasp.GraspConfig(**cfg_kwargs))
    doc = {
        "target": target_doc,
        "point": [float(v) for v in candidate.point],
        "normal": [float(v) for v in candidate.normal],
        "alignment": candidate.alignment,
        "centroid_dist": candidate.centroid_dist,
        "point_index": candidate.index,
        "n_instance_points": int(len(instance)),
    }
    _emit_json(doc, args.out)
    return 0


def _cmd_report(args) -> int:
    if args.report_cmd == "cost":
        params = report.CostModelParams.from_json(args.params) if args.params \
            else report.CostModelParams.default()
        categories = set(args.categories.split(",")) if args.categories \
            else set(params.gan_train_s)
        doc = {
            "n_scenes": args.n_scenes,
            "categories": sorted(categories),
            "seconds": report.estimate_prep_time(args.n_scenes, params, categories),
        }
        _emit_json(doc, args.out)
        if args.csv:
            counts = [int(v) for v in args.sweep.split(",")] if args.sweep \
                else [0, args.n_scenes]
            rows = report.prep_time_rows(params, categories, counts)
            lines = ["n_scenes,seconds"]
            lines += [f"{r['n_scenes']},{r['seconds']:.6f}" for r in rows]
            Path(args.csv).write_text("\n".join(lines) + "\n")
    elif args.report_cmd == "success":
        tally = report.TrialTally.from_json(args.tally)
        _emit_json(report.success_rates(tally), args.out)
    elif args.report_cmd == "bench":
        doc = report.bench_self_annotation(args.in_dir, thresh=args.white_thresh,
                                           min_area=args.min_area)
        _emit_json(doc, args.out)
    else:
        raise ValueError(f"unknown report command {args.report_cmd!r}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="clutterkit",
        description="Self-annotated synthetic scene tooling and grasp geometry.")
    parser.add_argument("--version", action="version", version=f"clutterkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("annotate-objects", help="self-annotate white-background object images")
    p.add_argument("--in", dest="in_dir", required=True, help="directory of object PNGs")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--category", required=True, help="category name for every image")
    p.add_argument("--white-thresh", type=int, default=objprep.DEFAULT_WHITE_THRESHOLD)
    p.add_argument("--min-area", type=int, default=objprep.DEFAULT_MIN_COMPONENT_AREA)
    p.set_defaults(func=_cmd_annotate_objects)

    p = sub.add_parser("make-scenes", help="compose annotated synthetic scenes")
    p.add_argument("--objects", default=None, help="directory with objects.json manifest")
    p.add_argument("--backgrounds", default=None, help="directory of background PNGs")
    p.add_argument("--n-scenes", type=int, default=None)
    p.add_argument("--instances-per-scene", default=None, metavar="A..B")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--augment", action="store_const", const=True, default=None)
    p.add_argument("--rotate", action="store_const", const=True, default=None)
    p.add_argument("--jitter", default=None, metavar="LO..HI")
    p.add_argument("--flip-prob", type=float, default=None)
    p.add_argument("--visibility-floor", type=float, default=None)
    p.add_argument("--scene-size", default=None, metavar="WxH")
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--config", default=None, help="JSON or key=value config file")
    p.set_defaults(func=_cmd_make_scenes)

    p = sub.add_parser("eval", help="score predictions against annotations")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--mode", choices=("box", "mask"), default="box")
    p.add_argument("--out", default=None, help="report JSON (stdout when omitted)")
    p.add_argument("--pr-curves", action="store_true")
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("cloud-seg", help="cluster a depth image's point cloud")
    p.add_argument("--depth", required=True, help="16-bit depth PNG (mm)")
    p.add_argument("--intrinsics", required=True, help="camera intrinsics JSON")
    p.add_argument("--method", choices=("kmeans", "dbscan", "masks"), required=True)
    p.add_argument("--pred", default=None, help="predictions JSON (masks method)")
    p.add_argument("--out", default=None)
    p.add_argument("--k", type=int, default=10, help="kmeans cluster count")
    p.add_argument("--eps", type=float, default=cloud.DEFAULT_DBSCAN_EPS)
    p.add_argument("--min-pts", type=int, default=cloud.DEFAULT_DBSCAN_MIN_PTS)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--no-plane-removal", action="store_true")
    p.add_argument("--plane-dist", type=float, default=cloud.DEFAULT_RANSAC_DIST)
    p.add_argument("--xyz-out", default=None)
    p.set_defaults(func=_cmd_cloud_seg)

    p = sub.add_parser("grasp-point", help="suction grasp point for the top detection")
    p.add_argument("--cloud", default=None, help="ASCII xyz cloud")
    p.add_argument("--depth", default=None, help="16-bit depth PNG (mm)")
    p.add_argument("--pred", default=None, help="predictions JSON")
    p.add_argument("--intrinsics", default=None)
    p.add_argument("--extrinsics", default=None, help="JSON with rotation/vertical")
    p.add_argument("--radius", type=float, default=grasp.DEFAULT_REGION_RADIUS)
    p.add_argument("--normal-k", type=int, default=grasp.DEFAULT_NORMAL_K)
    p.add_argument("--out", default=None)
    p.set_defaults(func=_cmd_grasp_point)

    p = sub.add_parser("report", help="cost model, success rates, throughput")
    rsub = p.add_subparsers(dest="report_cmd", required=True)
    rc = rsub.add_parser("cost")
    rc.add_argument("--params", default=None, help="cost parameters JSON")
    rc.add_argument("--n-scenes", type=int, required=True)
    rc.add_argument("--categories", default=None, help="comma-separated names")
    rc.add_argument("--out", default=None)
    rc.add_argument("--csv", default=None)
    rc.add_argument("--sweep", default=None, help="comma-separated scene counts")
    rc.set_defaults(func=_cmd_report)
    rs = rsub.add_parser("success")
    rs.add_argument("--tally", required=True)
    rs.add_argument("--out", default=None)
    rs.set_defaults(func=_cmd_report)
    rb = rsub.add_parser("bench")
    rb.add_argument("--in", dest="in_dir", required=True)
    rb.add_argument("--white-thresh", type=int, default=objprep.DEFAULT_WHITE_THRESHOLD)
    rb.add_argument("--min-area", type=int, default=objprep.DEFAULT_MIN_COMPONENT_AREA)
    rb.add_argument("--out", default=None)
    rb.set_defaults(func=_cmd_report)
    return parser


def run(argv=None) -> int:
    logging.basicConfig(
        level=os.environ.get("CLUTTERKIT_LOG_LEVEL", "INFO").upper(),
        format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except (ClutterkitError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main() -> None:
    sys.exit(run())
