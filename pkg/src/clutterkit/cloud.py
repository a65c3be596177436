"""Depth back-projection, plane removal, and clustering baselines.

Depth files hold millimeters; clouds live in meters in the camera
frame. Points carry an optional (u, v) pixel back-reference so a
segmentation mask can be lifted straight into its 3-D points.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .core import CameraIntrinsics, as_depth, as_mask, check_same_dims
from .errors import (
    DegenerateCloudError,
    EmptyGroundTruthError,
    NoPixelRefError,
    TooFewPointsError,
)
from .metrics import ap_from_scored_rows, f1
from .rng import Rng

NOISE = -1

DEFAULT_RANSAC_DIST = 0.005
DEFAULT_RANSAC_ITERS = 1000
DEFAULT_DBSCAN_EPS = 0.020
DEFAULT_DBSCAN_MIN_PTS = 10


@dataclass(frozen=True)
class PointCloud:
    """(N, 3) points in meters plus optional per-point source pixel."""

    points: np.ndarray
    pixel_ref: np.ndarray | None = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=np.float64).reshape(-1, 3)
        object.__setattr__(self, "points", pts)
        if self.pixel_ref is not None:
            ref = np.asarray(self.pixel_ref, dtype=np.int32).reshape(-1, 2)
            if ref.shape[0] != pts.shape[0]:
                raise ValueError("pixel_ref length differs from point count")
            object.__setattr__(self, "pixel_ref", ref)

    def __len__(self) -> int:
        return self.points.shape[0]


@dataclass(frozen=True)
class PlaneModel:
    """Plane ax + by + cz + d = 0 with unit normal (a, b, c)."""

    a: float
    b: float
    c: float
    d: float

    def __post_init__(self):
        norm = np.sqrt(self.a ** 2 + self.b ** 2 + self.c ** 2)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"normal must be unit length, |n| = {norm}")

    @property
    def normal(self) -> np.ndarray:
        return np.array([self.a, self.b, self.c])

    def distances(self, points: np.ndarray) -> np.ndarray:
        x, y, z = points[:, 0], points[:, 1], points[:, 2]
        return np.abs(((self.a * x) + (self.b * y)) + (self.c * z) + self.d)


def backproject(depth: np.ndarray, intr: CameraIntrinsics,
                roi: np.ndarray | None = None) -> PointCloud:
    """Back-project valid (nonzero) depth pixels through the pinhole model.

    z = depth/1000, x = (u - cx) z / fx, y = (v - cy) z / fy; pixels are
    visited row-major and each point records its source (u, v).
    """
    depth = as_depth(depth)
    if roi is None:
        roi_u8 = np.ones(depth.shape, dtype=np.uint8)
    else:
        roi = as_mask(roi)
        check_same_dims(depth, roi)
        roi_u8 = np.ascontiguousarray(roi.view(np.uint8))
    pts, pix = kernels.backproject_pixels(
        np.ascontiguousarray(depth), roi_u8,
        float(intr.fx), float(intr.fy), float(intr.cx), float(intr.cy))
    return PointCloud(points=pts, pixel_ref=pix)


def mask_to_cloud(cloud: PointCloud, mask: np.ndarray) -> PointCloud:
    """Points whose source pixel is set in the mask; refs preserved."""
    if cloud.pixel_ref is None:
        raise NoPixelRefError("cloud carries no pixel back-reference")
    mask = as_mask(mask)
    u = cloud.pixel_ref[:, 0]
    v = cloud.pixel_ref[:, 1]
    keep = mask[v, u]
    return PointCloud(points=cloud.points[keep], pixel_ref=cloud.pixel_ref[keep])


def _plane_from_triple(points: np.ndarray, i: int, j: int, k: int) -> PlaneModel | None:
    v1 = points[j] - points[i]
    v2 = points[k] - points[i]
    n = np.array([
        v1[1] * v2[2] - v1[2] * v2[1],
        v1[2] * v2[0] - v1[0] * v2[2],
        v1[0] * v2[1] - v1[1] * v2[0],
    ])
    norm = np.sqrt((n * n).sum())
    if norm < 1e-12:
        return None
    n = n / norm
    d = -(n[0] * points[i][0] + n[1] * points[i][1] + n[2] * points[i][2])
    # canonical sign: largest-magnitude normal component positive
    lead = int(np.argmax(np.abs(n)))
    if n[lead] < 0:
        n = -n
        d = -d
    return PlaneModel(a=float(n[0]), b=float(n[1]), c=float(n[2]), d=float(d))


def ransac_plane(cloud: PointCloud, dist_thresh: float = DEFAULT_RANSAC_DIST,
                 iters: int = DEFAULT_RANSAC_ITERS,
                 rng: Rng | None = None) -> tuple[PlaneModel, np.ndarray]:
    """Best-of-iters three-point plane by inlier count (ties: first found).

    Returns the plane and a boolean inlier array. Deterministic given
    the seed stream.
    """
    pts = cloud.points
    if len(cloud) < 3:
        raise DegenerateCloudError(f"need >= 3 points, have {len(cloud)}")
    rng = rng or Rng(0)
    triples = np.array([rng.distinct_triple(len(cloud)) for _ in range(iters)],
                       dtype=np.int64)
    best = int(kernels.ransac_best_triple(pts, triples, float(dist_thresh)))
    if best < 0:
        raise DegenerateCloudError("all sampled triples were collinear")
    plane = _plane_from_triple(pts, *triples[best])
    inliers = plane.distances(pts) <= dist_thresh
    return plane, inliers


def remove_plane(cloud: PointCloud, dist_thresh: float = DEFAULT_RANSAC_DIST,
                 iters: int = DEFAULT_RANSAC_ITERS,
                 rng: Rng | None = None) -> tuple[PointCloud, PlaneModel]:
    """Drop the dominant plane's inliers (tabletop removal)."""
    plane, inliers = ransac_plane(cloud, dist_thresh, iters, rng)
    keep = ~inliers
    ref = cloud.pixel_ref[keep] if cloud.pixel_ref is not None else None
    return PointCloud(points=cloud.points[keep], pixel_ref=ref), plane


def _densify_labels(labels: np.ndarray) -> np.ndarray:
    """Renumber clusters 0..m-1 by first appearance; noise stays -1."""
    out = np.full_like(labels, NOISE)
    mapping: dict[int, int] = {}
    for i, lab in enumerate(labels):
        if lab == NOISE:
            continue
        if lab not in mapping:
            mapping[int(lab)] = len(mapping)
        out[i] = mapping[int(lab)]
    return out


def kmeans(cloud: PointCloud, k: int, max_iters: int = 100,
           rng: Rng | None = None,
           objective_trace: list | None = None) -> np.ndarray:
    """Lloyd iterations from distance-squared weighted (k-means++ style)
    seeding.

    Stops at an assignment fixpoint or max_iters. Empty clusters are
    reseeded to the point farthest from its current centroid. Labels
    come back densely numbered by first appearance. When given,
    objective_trace collects the sum of squared distances after each
    assignment step.
    """
    pts = cloud.points
    n = len(cloud)
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < k:
        raise TooFewPointsError(f"{n} points cannot form {k} clusters")
    rng = rng or Rng(0)

    centroids = np.empty((k, 3), dtype=np.float64)
    centroids[0] = pts[rng.randbelow(n)]
    d2 = ((pts - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = float(d2.sum())
        if total <= 0.0:
            idx = rng.randbelow(n)
        else:
            r = rng.random() * total
            idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
            idx = min(idx, n - 1)
        centroids[j] = pts[idx]
        d2 = np.minimum(d2, ((pts - centroids[j]) ** 2).sum(axis=1))

    labels = np.full(n, -1, dtype=np.int32)
    for _ in range(max_iters):
        new_labels = kernels.kmeans_assign(pts, centroids)
        if objective_trace is not None:
            diff = pts - centroids[new_labels]
            objective_trace.append(float((diff * diff).sum()))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
        sums = np.zeros((k, 3), dtype=np.float64)
        np.add.at(sums, labels, pts)
        counts = np.bincount(labels, minlength=k)
        taken: set[int] = set()
        for c in range(k):
            if counts[c] > 0:
                centroids[c] = sums[c] / counts[c]
        if (counts == 0).any():
            dist_own = ((pts - centroids[labels]) ** 2).sum(axis=1)
            order = np.argsort(-dist_own, kind="stable")
            oi = 0
            for c in range(k):
                if counts[c] > 0:
                    continue
                while int(order[oi]) in taken:
                    oi += 1
                centroids[c] = pts[order[oi]]
                taken.add(int(order[oi]))
                oi += 1
    return _densify_labels(labels)


def dbscan(cloud: PointCloud, eps: float = DEFAULT_DBSCAN_EPS,
           min_pts: int = DEFAULT_DBSCAN_MIN_PTS) -> np.ndarray:
    """Density clustering; border points join the first cluster that
    reaches them under the fixed point-index scan order. Noise is -1."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if min_pts < 1:
        raise ValueError("min_pts must be >= 1")
    return kernels.dbscan_labels(cloud.points, float(eps), int(min_pts))


def labels_to_clusters(labels: np.ndarray) -> list[np.ndarray]:
    """Index arrays per cluster id (noise excluded), ordered by id."""
    out = []
    for cid in range(int(labels.max()) + 1 if labels.size else 0):
        out.append(np.flatnonzero(labels == cid))
    return out


def point_set_iou(a: np.ndarray, b: np.ndarray) -> float:
    inter = np.intersect1d(a, b).size
    union = np.union1d(a, b).size
    return inter / union if union else 0.0


def cloud_seg_metrics(pred_clusters: list[np.ndarray],
                      gt_clusters: list[np.ndarray],
                      iou_t: float = 0.5) -> tuple[float, float, float]:
    """Class-agnostic (AP, AR, F1) percents over point-index clusters.

    Clusters have no learned scores, so confidence is cluster size
    normalized by the largest cluster; matching is then the same greedy
    protocol as the image metrics.
    """
    if not gt_clusters:
        raise EmptyGroundTruthError("no ground-truth clusters")
    if pred_clusters:
        max_size = max(len(c) for c in pred_clusters)
        confs = [len(c) / max_size if max_size else 0.0 for c in pred_clusters]
    else:
        confs = []
    order = sorted(range(len(pred_clusters)), key=lambda i: (-confs[i], i))
    taken = [False] * len(gt_clusters)
    rows = []
    matched = 0
    for pi in order:
        best_gi = -1
        best_iou = 0.0
        for gi, gt in enumerate(gt_clusters):
            if taken[gi]:
                continue
            iou = point_set_iou(pred_clusters[pi], gt)
            if iou >= iou_t and iou > best_iou:
                best_iou = iou
                best_gi = gi
        tp = best_gi >= 0
        if tp:
            taken[best_gi] = True
            matched += 1
        rows.append((confs[pi], "", pi, tp))
    ap = ap_from_scored_rows(rows, len(gt_clusters)) * 100.0
    ar = matched / len(gt_clusters) * 100.0
    return ap, ar, f1(ap, ar)


def save_xyz(path: str | Path, cloud: PointCloud,
             labels: np.ndarray | None = None) -> None:
    """ASCII export: x y z [u v] [label], one point per line."""
    cols = ["x", "y", "z"]
    if cloud.pixel_ref is not None:
        cols += ["u", "v"]
    if labels is not None:
        cols += ["label"]
    lines = ["# " + " ".join(cols)]
    for i in range(len(cloud)):
        parts = [f"{v:.9g}" for v in cloud.points[i]]
        if cloud.pixel_ref is not None:
            parts += [str(int(cloud.pixel_ref[i, 0])), str(int(cloud.pixel_ref[i, 1]))]
        if labels is not None:
            parts.append(str(int(labels[i])))
        lines.append(" ".join(parts))
    Path(path).write_text("\n".join(lines) + "\n")


def load_xyz(path: str | Path) -> tuple[PointCloud, np.ndarray | None]:
    """Read the save_xyz format; tolerates missing header for plain xyz."""
    text = Path(path).read_text().strip().splitlines()
    cols = ["x", "y", "z"]
    rows = []
    for line in text:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            cols = line[1:].split()
            continue
        rows.append(line.split())
    if not rows:
        return PointCloud(points=np.zeros((0, 3))), None
    data = np.array([[float(v) for v in r] for r in rows])
    if data.shape[1] < 3:
        raise ValueError("xyz file needs at least 3 columns")
    pts = data[:, :3]
    ref = None
    labels = None
    if "u" in cols and "v" in cols:
        ref = data[:, [cols.index("u"), cols.index("v")]].astype(np.int32)
    if "label" in cols:
        labels = data[:, cols.index("label")].astype(np.int32)
    return PointCloud(points=pts, pixel_ref=ref), labels
