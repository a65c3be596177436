"""Suction grasp target selection and grasp point geometry.

The most graspable instance is simply the highest-confidence
detection. Its grasp point is found among the points whose planar
(x-y) distance to the instance's 2-D centroid is within the region
radius: the candidate whose estimated surface normal aligns best with
the world vertical wins, so the suction cup can approach straight
down.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .cloud import PointCloud
from .errors import EmptyCloudError, NoCandidatesError, NoDetectionsError, TooFewPointsError
from .metrics import Detection

DEFAULT_REGION_RADIUS = 0.010   # meters
DEFAULT_NORMAL_K = 30


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=np.float64)
    norm = np.linalg.norm(v)
    if norm <= 0:
        raise ValueError("zero-length direction")
    return v / norm


@dataclass(frozen=True)
class GraspConfig:
    region_radius: float = DEFAULT_REGION_RADIUS
    normal_k: int = DEFAULT_NORMAL_K
    vertical: np.ndarray = field(default_factory=lambda: np.array([0.0, 0.0, 1.0]))
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))

    def __post_init__(self):
        if self.region_radius <= 0:
            raise ValueError("region radius must be positive")
        object.__setattr__(self, "vertical", _unit(self.vertical))
        rot = np.asarray(self.rotation, dtype=np.float64)
        if rot.shape != (3, 3):
            raise ValueError("rotation must be a 3x3 matrix")
        object.__setattr__(self, "rotation", rot)


@dataclass(frozen=True)
class GraspCandidate:
    point: np.ndarray
    normal: np.ndarray
    alignment: float
    centroid_dist: float
    index: int


def select_target(dets: list[Detection]) -> Detection:
    """Highest-confidence detection; ties keep the lowest index."""
    if not dets:
        raise NoDetectionsError("no detections to select from")
    best = 0
    for i, det in enumerate(dets):
        if det.confidence > dets[best].confidence:
            best = i
    return dets[best]


def centroid2d(cloud: PointCloud | np.ndarray) -> tuple[float, float]:
    """Mean x and y over all points."""
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud)
    if pts.shape[0] == 0:
        raise EmptyCloudError("centroid of an empty cloud")
    return float(pts[:, 0].mean()), float(pts[:, 1].mean())


def estimate_normals(cloud: PointCloud | np.ndarray, k: int = DEFAULT_NORMAL_K,
                     orient=(0.0, 0.0, 1.0)) -> np.ndarray:
    """Per-point unit normals from k-nearest-neighbor covariance.

    The normal is the smallest-eigenvalue eigenvector of the
    neighborhood covariance (neighbors include the point itself).
    Signs are flipped so dot(normal, orient) >= 0; orient defaults to
    +z, the direction back toward an overhead camera.
    """
    pts = cloud.points if isinstance(cloud, PointCloud) else np.asarray(cloud, dtype=np.float64)
    n = pts.shape[0]
    if k < 3:
        raise ValueError("need k >= 3 neighbors")
    if n <= k:
        raise TooFewPointsError(f"need more than k={k} points, have {n}")
    covs = kernels.knn_covariances(np.ascontiguousarray(pts), int(k))
    _, vecs = np.linalg.eigh(covs)
    normals = vecs[:, :, 0]
    flip = normals @ _unit(orient) < 0
    normals[flip] = -normals[flip]
    return normals


def grasp_point(instance_cloud: PointCloud, cfg: GraspConfig | None = None) -> GraspCandidate:
    """Best vertically-aligned point near the instance's 2-D centroid.

    Candidates lie within cfg.region_radius of the centroid in the
    x-y plane (the radius doubles once if that region is empty). The
    winner maximizes dot(normal, vertical); ties fall back to smaller
    centroid distance, then lower point index. Points are rotated into
    the world frame by cfg.rotation before any geometry.
    """
    cfg = cfg or GraspConfig()
    if len(instance_cloud) < cfg.normal_k + 1:
        raise TooFewPointsError(
            f"need at least normal_k+1 = {cfg.normal_k + 1} points, "
            f"have {len(instance_cloud)}"
        )
    pts = instance_cloud.points @ cfg.rotation.T
    cx, cy = centroid2d(pts)
    planar = np.sqrt((pts[:, 0] - cx) ** 2 + (pts[:, 1] - cy) ** 2)
    candidates = np.flatnonzero(planar <= cfg.region_radius)
    if candidates.size == 0:
        candidates = np.flatnonzero(planar <= 2.0 * cfg.region_radius)
        if candidates.size == 0:
            raise NoCandidatesError(
                f"no points within {2 * cfg.region_radius} m of the centroid"
            )
    normals = estimate_normals(pts, cfg.normal_k, orient=cfg.vertical)
    alignment = normals @ cfg.vertical
    order = np.lexsort((candidates, planar[candidates], -alignment[candidates]))
    best = int(candidates[order[0]])
    return GraspCandidate(
        point=pts[best].copy(),
        normal=normals[best].copy(),
        alignment=float(alignment[best]),
        centroid_dist=float(planar[best]),
        index=best,
    )
