"""Pure-numpy implementations of the hot kernels.

Fallback path used when CLUTTERKIT_BACKEND=numpy or numba is not
importable. Every function here must produce results identical to its
twin in numba_impl (bit-exact for integer outputs, same IEEE ops for
float outputs); tests/test_backends.py enforces that.
"""

from __future__ import annotations

import numpy as np

BACKEND = "numpy"


def rle_encode_flat(flat: np.ndarray) -> np.ndarray:
    """Run-length counts of a flat 0/1 array, starting with a zero run."""
    flat = np.ascontiguousarray(flat, dtype=np.uint8)
    changes = np.nonzero(np.diff(flat))[0] + 1
    bounds = np.concatenate(([0], changes, [flat.size]))
    counts = np.diff(bounds).astype(np.int64)
    if flat.size and flat[0] == 1:
        counts = np.concatenate(([0], counts))
    return counts


def rle_decode_flat(counts: np.ndarray, n: int) -> np.ndarray:
    values = np.zeros(len(counts), dtype=np.uint8)
    values[1::2] = 1
    out = np.repeat(values, counts)
    if out.size != n:
        raise ValueError("run-length counts do not sum to the pixel count")
    return out


def label_components(mask: np.ndarray) -> np.ndarray:
    """4-connected component labels (0 = background, ids arbitrary).

    Iterative max-label propagation: O(component diameter) passes, each
    a vectorized sweep. Adequate for the small object images this path
    serves; the numba twin does a single flood fill.
    """
    fg = mask.astype(bool)
    h, w = fg.shape
    lab = (np.arange(h * w, dtype=np.int64).reshape(h, w) + 1) * fg
    while True:
        new = lab.copy()
        new[1:, :] = np.maximum(new[1:, :], lab[:-1, :])
        new[:-1, :] = np.maximum(new[:-1, :], lab[1:, :])
        new[:, 1:] = np.maximum(new[:, 1:], lab[:, :-1])
        new[:, :-1] = np.maximum(new[:, :-1], lab[:, 1:])
        new *= fg
        if np.array_equal(new, lab):
            break
        lab = new
    return lab


def kmeans_assign(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    d2 = ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
    return d2.argmin(axis=1).astype(np.int32)


def dbscan_labels(points: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    n = points.shape[0]
    labels = np.full(n, -1, dtype=np.int32)
    claimed = np.zeros(n, dtype=bool)   # labeled or queued for the current sweep
    eps2 = eps * eps

    def region(i: int) -> np.ndarray:
        d = points - points[i]
        return np.nonzero(d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2] <= eps2)[0]

    cluster = 0
    for i in range(n):
        if claimed[i]:
            continue
        neigh = region(i)
        if neigh.size < min_pts:
            continue          # stays noise unless a later cluster absorbs it
        labels[i] = cluster
        claimed[i] = True
        queue = [int(j) for j in neigh if not claimed[j]]
        claimed[np.asarray(queue, dtype=np.int64)] = True
        qi = 0
        while qi < len(queue):
            j = queue[qi]
            qi += 1
            labels[j] = cluster
            jn = region(j)
            if jn.size >= min_pts:
                fresh = [int(q) for q in jn if not claimed[q]]
                for q in fresh:
                    claimed[q] = True
                queue.extend(fresh)
        cluster += 1
    return labels


def ransac_best_triple(points: np.ndarray, triples: np.ndarray, dist: float) -> int:
    """Index of the hypothesis with the most inliers; ties keep the first."""
    x = points[:, 0]
    y = points[:, 1]
    z = points[:, 2]
    best = -1
    best_count = 0
    for t in range(triples.shape[0]):
        i, j, k = triples[t]
        v1 = points[j] - points[i]
        v2 = points[k] - points[i]
        nx = v1[1] * v2[2] - v1[2] * v2[1]
        ny = v1[2] * v2[0] - v1[0] * v2[2]
        nz = v1[0] * v2[1] - v1[1] * v2[0]
        norm = np.sqrt(nx * nx + ny * ny + nz * nz)
        if norm < 1e-12:
            continue
        a = nx / norm
        b = ny / norm
        c = nz / norm
        d = -(a * points[i][0] + b * points[i][1] + c * points[i][2])
        count = int(np.count_nonzero(np.abs(((a * x) + (b * y)) + (c * z) + d) <= dist))
        if count > best_count:
            best = t
            best_count = count
    return best


def backproject_pixels(depth: np.ndarray, roi: np.ndarray,
                       fx: float, fy: float, cx: float, cy: float):
    """Pinhole back-projection of valid in-ROI pixels, row-major order."""
    valid = (depth > 0) & (roi > 0)
    v, u = np.nonzero(valid)
    z = depth[v, u].astype(np.float64) / 1000.0
    x = (u.astype(np.float64) - cx) * z / fx
    y = (v.astype(np.float64) - cy) * z / fy
    pts = np.stack([x, y, z], axis=1)
    pix = np.stack([u, v], axis=1).astype(np.int32)
    return pts, pix


def knn_covariances(points: np.ndarray, k: int) -> np.ndarray:
    """Covariance of each point's k nearest neighbors (self included)."""
    n = points.shape[0]
    covs = np.empty((n, 3, 3), dtype=np.float64)
    for i in range(n):
        d = points - points[i]
        d2 = d[:, 0] * d[:, 0] + d[:, 1] * d[:, 1] + d[:, 2] * d[:, 2]
        idx = np.argsort(d2, kind="stable")[:k]
        nb = points[idx]
        centered = nb - nb.mean(axis=0)
        covs[i] = centered.T @ centered / k
    return covs
