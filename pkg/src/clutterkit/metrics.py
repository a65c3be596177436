"""Instance-segmentation scoring: IoU, greedy matching, AP/AR/F1, PR.

Protocol, fixed for determinism:
  * matching is per scene and category, greedy over detections in
    descending confidence (ties: lower detection index first); each
    detection takes the unmatched ground truth with the highest
    IoU >= threshold (ties: lower ground-truth index);
  * AP is 101-point interpolated (precision envelope sampled at
    recalls 0.00, 0.01, ..., 1.00), detections pooled over scenes per
    category, then averaged over categories present in the ground
    truth;
  * AR is matched ground truths over all ground truths at the given
    threshold, using every detection (no top-k cap), averaged over
    categories;
  * the [0.5:0.95] sweep averages the ten thresholds 0.50, 0.55, ...
    0.95.

All public metric values are percentages.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import rle
from .core import Bbox, category_name
from .errors import DimensionMismatchError, NoGroundTruthError

IOU_SWEEP = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))


@dataclass(frozen=True)
class Detection:
    scene_id: str
    category: int
    confidence: float
    bbox: Bbox
    mask: np.ndarray | None = None

    def __post_init__(self):
        if not 0.0 <= self.confidence <= 1.0:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


@dataclass(frozen=True)
class GroundTruth:
    scene_id: str
    category: int
    bbox: Bbox
    mask: np.ndarray | None = None


@dataclass(frozen=True)
class PrCurve:
    """(recall, precision) points after the monotone precision envelope."""

    points: list[tuple[float, float]]
    iou_threshold: float
    mode: str

    def to_csv(self) -> str:
        lines = ["recall,precision"]
        lines += [f"{r:.6f},{p:.6f}" for r, p in self.points]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "iou_threshold": self.iou_threshold,
            "mode": self.mode,
            "recall": [r for r, _ in self.points],
            "precision": [p for _, p in self.points],
        }


@dataclass
class MetricsReport:
    mode: str
    per_category: dict[str, dict[str, float]]
    overall: dict[str, float]
    pooled: dict[str, float]
    flagged: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "mode": self.mode,
            "per_category": {
                name: {k: round(v, 1) for k, v in vals.items()}
                for name, vals in self.per_category.items()
            },
            "overall": {k: round(v, 1) for k, v in self.overall.items()},
            "pooled": {k: round(v, 1) for k, v in self.pooled.items()},
            "flagged": self.flagged,
        }


def iou_box(a: Bbox, b: Bbox) -> float:
    ix = max(a.x, b.x)
    iy = max(a.y, b.y)
    ix2 = min(a.x + a.w, b.x + b.w)
    iy2 = min(a.y + a.h, b.y + b.h)
    iw = max(0, ix2 - ix)
    ih = max(0, iy2 - iy)
    inter = iw * ih
    if inter == 0:
        return 0.0
    return inter / (a.area + b.area - inter)


def iou_mask(a: np.ndarray, b: np.ndarray) -> float:
    if a.shape != b.shape:
        raise DimensionMismatchError(f"mask dims differ: {a.shape} vs {b.shape}")
    union = int(np.logical_or(a, b).sum())
    if union == 0:
        return 0.0
    inter = int(np.logical_and(a, b).sum())
    return inter / union


def _pair_iou(det: Detection, gt: GroundTruth, mode: str) -> float:
    if mode == "box":
        return iou_box(det.bbox, gt.bbox)
    if mode == "mask":
        if det.mask is None or gt.mask is None:
            raise ValueError("mask mode needs masks on detections and ground truth")
        return iou_mask(det.mask, gt.mask)
    raise ValueError(f"mode must be 'box' or 'mask', got {mode!r}")


def match_detections(dets: list[Detection], gts: list[GroundTruth],
                     iou_t: float, mode: str) -> list[tuple[int, int]]:
    """Greedy matches within one scene/category stratum.

    Returns (detection_index, ground_truth_index) pairs; detections
    absent from the list are false positives, ground truths absent are
    false negatives.
    """
    order = sorted(range(len(dets)), key=lambda i: (-dets[i].confidence, i))
    taken = [False] * len(gts)
    matches = []
    for di in order:
        best_gi = -1
        best_iou = 0.0
        for gi, gt in enumerate(gts):
            if taken[gi]:
                continue
            iou = _pair_iou(dets[di], gt, mode)
            if iou >= iou_t and iou > best_iou:
                best_iou = iou
                best_gi = gi
        if best_gi >= 0:
            taken[best_gi] = True
            matches.append((di, best_gi))
    return matches


def _stratify(items, class_agnostic: bool):
    """Group by (scene, category); category collapses when agnostic."""
    strata: dict[tuple, list] = {}
    for idx, item in enumerate(items):
        key = (item.scene_id, 0 if class_agnostic else item.category)
        strata.setdefault(key, []).append((idx, item))
    return strata


class _IouMemo:
    """Pair IoUs cached across thresholds within one evaluation.

    IoU between a detection and a ground truth never depends on the
    matching threshold, so a full report only needs each pair once.
    Keys are indices into the master detection/ground-truth lists.
    """

    def __init__(self, dets, gts, mode):
        self.dets = dets
        self.gts = gts
        self.mode = mode
        self.cache: dict[tuple[int, int], float] = {}

    def __call__(self, di: int, gi: int) -> float:
        key = (di, gi)
        value = self.cache.get(key)
        if value is None:
            value = _pair_iou(self.dets[di], self.gts[gi], self.mode)
            self.cache[key] = value
        return value


def _greedy_match_indexed(sdets, sgts, iou_t, memo):
    """Greedy matching over (master_index, item) pairs via the memo."""
    order = sorted(range(len(sdets)), key=lambda i: (-sdets[i][1].confidence, i))
    taken = [False] * len(sgts)
    matched_local = set()
    for li in order:
        di = sdets[li][0]
        best_gi = -1
        best_iou = 0.0
        for gi, (gidx, _) in enumerate(sgts):
            if taken[gi]:
                continue
            iou = memo(di, gidx)
            if iou >= iou_t and iou > best_iou:
                best_iou = iou
                best_gi = gi
        if best_gi >= 0:
            taken[best_gi] = True
            matched_local.add(li)
    return matched_local


def _scored_rows(dets: list[Detection], gts: list[GroundTruth], iou_t: float,
                 mode: str, class_agnostic: bool = False,
                 memo: _IouMemo | None = None):
    """Pooled (confidence, scene, index, is_tp) rows per category.

    Returns {category: (rows, n_gt)}; the category key is 0 when
    class-agnostic.
    """
    if memo is None:
        memo = _IouMemo(dets, gts, mode)
    det_strata = _stratify(dets, class_agnostic)
    gt_strata = _stratify(gts, class_agnostic)
    categories = sorted({key[1] for key in gt_strata})
    out = {}
    for cat in categories:
        rows = []
        n_gt = 0
        scenes = {key[0] for key in gt_strata if key[1] == cat}
        scenes |= {key[0] for key in det_strata if key[1] == cat}
        for scene in sorted(scenes):
            sdets = det_strata.get((scene, cat), [])
            sgts = gt_strata.get((scene, cat), [])
            n_gt += len(sgts)
            matched = _greedy_match_indexed(sdets, sgts, iou_t, memo)
            for local_idx, (orig_idx, det) in enumerate(sdets):
                rows.append((det.confidence, scene, orig_idx, local_idx in matched))
        out[cat] = (rows, n_gt)
    return out


def ap_from_scored_rows(rows, n_gt: int) -> float:
    """101-point interpolated AP as a fraction in [0, 1]."""
    if n_gt == 0:
        raise NoGroundTruthError("AP undefined without ground truth")
    if not rows:
        return 0.0
    rows = sorted(rows, key=lambda r: (-r[0], r[1], r[2]))
    tp = np.cumsum([1 if r[3] else 0 for r in rows])
    fp = np.cumsum([0 if r[3] else 1 for r in rows])
    recall = tp / n_gt
    precision = tp / (tp + fp)
    # monotone non-increasing precision envelope
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    samples = np.arange(101) / 100.0
    idx = np.searchsorted(recall, samples, side="left")
    sampled = np.where(idx < len(envelope), envelope[np.minimum(idx, len(envelope) - 1)], 0.0)
    return float(sampled.mean())


def average_precision(dets: list[Detection], gts: list[GroundTruth],
                      iou_t: float, mode: str) -> float:
    """Category-averaged AP, percent."""
    scored = _scored_rows(dets, gts, iou_t, mode)
    if not scored:
        raise NoGroundTruthError("no ground-truth instances")
    _warn_uncovered(dets, scored)
    aps = [ap_from_scored_rows(rows, n_gt) for rows, n_gt in scored.values()]
    return float(np.mean(aps)) * 100.0


def average_recall(dets: list[Detection], gts: list[GroundTruth],
                   iou_t: float, mode: str) -> float:
    """Category-averaged recall at one threshold, percent; no top-k cap."""
    scored = _scored_rows(dets, gts, iou_t, mode)
    if not scored:
        raise NoGroundTruthError("no ground-truth instances")
    recalls = []
    for rows, n_gt in scored.values():
        matched = sum(1 for r in rows if r[3])
        recalls.append(matched / n_gt)
    return float(np.mean(recalls)) * 100.0


def _warn_uncovered(dets, scored):
    uncovered = {d.category for d in dets} - set(scored)
    for cat in sorted(uncovered):
        warnings.warn(f"category {cat} has detections but no ground truth; skipped",
                      stacklevel=3)


def ap_sweep(dets, gts, mode: str, thresholds=IOU_SWEEP) -> float:
    return float(np.mean([average_precision(dets, gts, t, mode) for t in thresholds]))


def ar_sweep(dets, gts, mode: str, thresholds=IOU_SWEEP) -> float:
    return float(np.mean([average_recall(dets, gts, t, mode) for t in thresholds]))


def f1(precision_pct: float, recall_pct: float) -> float:
    """Harmonic mean of two percentages."""
    for v in (precision_pct, recall_pct):
        if not 0.0 <= v <= 100.0:
            raise ValueError(f"value {v} outside [0, 100]")
    if precision_pct == 0.0 and recall_pct == 0.0:
        warnings.warn("F1 of (0, 0) defined as 0")
        return 0.0
    return 2.0 * precision_pct * recall_pct / (precision_pct + recall_pct)


def pr_curve(dets: list[Detection], gts: list[GroundTruth], iou_t: float,
             mode: str) -> PrCurve:
    """Class-agnostic PR curve after the monotone precision envelope."""
    scored = _scored_rows(dets, gts, iou_t, mode, class_agnostic=True)
    if not scored:
        raise NoGroundTruthError("no ground-truth instances")
    rows, n_gt = scored[0]
    if not rows:
        return PrCurve(points=[], iou_threshold=iou_t, mode=mode)
    rows = sorted(rows, key=lambda r: (-r[0], r[1], r[2]))
    tp = np.cumsum([1 if r[3] else 0 for r in rows])
    fp = np.cumsum([0 if r[3] else 1 for r in rows])
    recall = tp / n_gt
    precision = tp / (tp + fp)
    envelope = np.maximum.accumulate(precision[::-1])[::-1]
    points = [(0.0, float(envelope[0]))]
    for r, p in zip(recall, envelope):
        pt = (float(r), float(p))
        if pt != points[-1]:
            points.append(pt)
    return PrCurve(points=points, iou_threshold=iou_t, mode=mode)


def evaluate(dets: list[Detection], gts: list[GroundTruth], mode: str) -> MetricsReport:
    """Full report: per-category, category-averaged, and pooled metrics.

    One IoU memo serves every threshold and aggregation level, so each
    detection/ground-truth pair is compared at most once per mode.
    """
    if not gts:
        raise NoGroundTruthError("no ground-truth instances")
    categories = sorted({g.category for g in gts})
    flagged = sorted(
        category_name(c) for c in {d.category for d in dets} - set(categories)
    )
    memo = _IouMemo(dets, gts, mode)

    def sweep_stats(class_agnostic: bool):
        ap_t: dict[float, dict] = {}
        ar_t: dict[float, dict] = {}
        for t in IOU_SWEEP:
            scored = _scored_rows(dets, gts, t, mode,
                                  class_agnostic=class_agnostic, memo=memo)
            ap_t[t] = {cat: ap_from_scored_rows(rows, n_gt) * 100.0
                       for cat, (rows, n_gt) in scored.items()}
            ar_t[t] = {cat: sum(1 for r in rows if r[3]) / n_gt * 100.0
                       for cat, (rows, n_gt) in scored.items()}
        return ap_t, ar_t

    def metric_set(ap_t, ar_t, cats):
        aps = {t: float(np.mean([ap_t[t][c] for c in cats])) for t in IOU_SWEEP}
        ars = {t: float(np.mean([ar_t[t][c] for c in cats])) for t in IOU_SWEEP}
        ap = float(np.mean(list(aps.values())))
        ar = float(np.mean(list(ars.values())))
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return {
                "ap50": aps[0.5], "ap75": aps[0.75], "ap": ap,
                "ar50": ars[0.5], "ar75": ars[0.75], "ar": ar,
                "f1": f1(ap, ar),
            }

    ap_t, ar_t = sweep_stats(class_agnostic=False)
    per_category = {
        category_name(cat): metric_set(ap_t, ar_t, [cat]) for cat in categories
    }
    overall = metric_set(ap_t, ar_t, categories)

    # single-category pooling: every instance assigned one class
    pooled_ap_t, pooled_ar_t = sweep_stats(class_agnostic=True)
    pooled = metric_set(pooled_ap_t, pooled_ar_t, [0])

    return MetricsReport(mode=mode, per_category=per_category, overall=overall,
                         pooled=pooled, flagged=flagged)


def load_ground_truth(path: str | Path) -> list[GroundTruth]:
    """Read the dataset annotation JSON into ground-truth instances."""
    with open(path) as f:
        doc = json.load(f)
    scene_by_image = {img["id"]: (Path(img["file_name"]).stem, img["height"], img["width"])
                      for img in doc["images"]}
    gts = []
    for ann in doc["annotations"]:
        scene_id, h, w = scene_by_image[ann["image_id"]]
        mask = rle.coco_to_mask(ann["segmentation"]) if "segmentation" in ann else None
        x, y, bw, bh = ann["bbox"]
        gts.append(GroundTruth(scene_id=scene_id, category=int(ann["category_id"]),
                               bbox=Bbox(int(x), int(y), max(1, int(bw)), max(1, int(bh))),
                               mask=mask))
    return gts


def load_predictions(path: str | Path, gt_path: str | Path) -> list[Detection]:
    """Read predictions (annotation schema plus `score`).

    Accepts either a bare JSON array or {"annotations": [...]}; image
    ids resolve against the ground-truth file's image table.
    """
    with open(gt_path) as f:
        gt_doc = json.load(f)
    scene_by_image = {img["id"]: Path(img["file_name"]).stem for img in gt_doc["images"]}
    with open(path) as f:
        doc = json.load(f)
    records = doc["annotations"] if isinstance(doc, dict) else doc
    dets = []
    for rec in records:
        mask = rle.coco_to_mask(rec["segmentation"]) if "segmentation" in rec else None
        x, y, bw, bh = rec["bbox"]
        dets.append(Detection(
            scene_id=scene_by_image[rec["image_id"]],
            category=int(rec["category_id"]),
            confidence=float(rec["score"]),
            bbox=Bbox(int(x), int(y), max(1, int(bw)), max(1, int(bh))),
            mask=mask,
        ))
    return dets
