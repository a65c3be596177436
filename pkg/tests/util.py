"""Shared fixtures-by-construction and independent test oracles.

The oracle implementations here deliberately avoid the library's code
paths (plain loops, sets, and fractions) so equality checks mean
something.
"""

from __future__ import annotations

import numpy as np

from clutterkit.rng import Rng

# ---------------------------------------------------------------------------
# synthetic inputs


def blob_image(seed: int, size: int = 64, color=None) -> np.ndarray:
    """White-background image with one solid ellipse, deterministic."""
    rng = Rng(seed)
    h = w = size
    img = np.full((h, w, 3), 255, dtype=np.uint8)
    if color is None:
        color = (rng.randint(0, 200), rng.randint(0, 200), rng.randint(0, 200))
    cy = rng.randint(size // 3, 2 * size // 3)
    cx = rng.randint(size // 3, 2 * size // 3)
    ry = rng.randint(size // 8, size // 4)
    rx = rng.randint(size // 8, size // 4)
    yy, xx = np.mgrid[0:h, 0:w]
    inside = ((yy - cy) / ry) ** 2 + ((xx - cx) / rx) ** 2 <= 1.0
    img[inside] = color
    return img


def random_mask(seed: int, h: int, w: int, density: float = 0.3) -> np.ndarray:
    rng = Rng(seed)
    flat = np.array([rng.random() < density for _ in range(h * w)])
    return flat.reshape(h, w)


def noise_background(seed: int, h: int, w: int) -> np.ndarray:
    """Uniform random RGB noise; vectorized splitmix64 so it reproduces
    the Rng(seed) byte stream exactly but fast."""
    n = h * w * 3
    gamma = np.uint64(0x9E3779B97F4A7C15)
    idx = np.arange(1, n + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        z = np.uint64(seed) + idx * gamma
        z = (z ^ (z >> np.uint64(30))) * np.uint64(0xBF58476D1CE4E5B9)
        z = (z ^ (z >> np.uint64(27))) * np.uint64(0x94D049BB133111EB)
        z = z ^ (z >> np.uint64(31))
    return (z % 256).astype(np.uint8).reshape(h, w, 3)


def coordinate_image(h: int, w: int) -> np.ndarray:
    """Image whose pixel value encodes its own (y, x) position."""
    yy, xx = np.mgrid[0:h, 0:w]
    return np.stack([yy % 256, xx % 256, (yy + xx) % 256], axis=2).astype(np.uint8)


# ---------------------------------------------------------------------------
# oracles


def flood_components(mask: np.ndarray) -> list[set[tuple[int, int]]]:
    """4-connected components by breadth-first search over pixel sets."""
    h, w = mask.shape
    remaining = {(r, c) for r in range(h) for c in range(w) if mask[r, c]}
    components = []
    while remaining:
        seed_px = min(remaining)
        comp = set()
        frontier = [seed_px]
        remaining.discard(seed_px)
        while frontier:
            r, c = frontier.pop()
            comp.add((r, c))
            for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if (rr, cc) in remaining:
                    remaining.discard((rr, cc))
                    frontier.append((rr, cc))
        components.append(comp)
    return components


def zbuffer_render(background, pasted):
    """Per-pixel topmost-wins render.

    pasted: list of (x, y, patch, mask) already in paste order (later
    entries sit on top). Returns (image, owner) with owner holding the
    1-based index of the visible instance per pixel (0 = background).
    """
    h, w = background.shape[:2]
    image = background.copy()
    owner = np.zeros((h, w), dtype=np.int64)
    for py in range(h):
        for px in range(w):
            for idx in range(len(pasted) - 1, -1, -1):
                x, y, patch, mask = pasted[idx]
                ly, lx = py - y, px - x
                if 0 <= ly < mask.shape[0] and 0 <= lx < mask.shape[1] and mask[ly, lx]:
                    image[py, px] = patch[ly, lx]
                    owner[py, px] = idx + 1
                    break
    return image, owner


def brute_force_ap(records, n_gt: int) -> float:
    """Independent 101-point AP from (confidence, scene, index, is_tp).

    Precision at each cutoff is recounted from scratch; the envelope is
    a max-scan over suffixes. Returns a fraction.
    """
    if n_gt == 0:
        raise ValueError("no ground truth")
    if not records:
        return 0.0
    ordered = sorted(records, key=lambda r: (-r[0], r[1], r[2]))
    pr_points = []
    for cut in range(1, len(ordered) + 1):
        head = ordered[:cut]
        tp = sum(1 for r in head if r[3])
        pr_points.append((tp / n_gt, tp / cut))
    total = 0.0
    for i in range(101):
        r = i / 100.0
        best = 0.0
        for rec, prec in pr_points:
            if rec >= r and prec > best:
                best = prec
        total += best
    return total / 101.0


def greedy_match_oracle(det_list, gt_list, iou_fn, iou_t):
    """Documented greedy matching, recomputed with explicit sets.

    det_list: (confidence, payload) tuples; gt_list: payloads.
    Returns {det_index: gt_index}.
    """
    order = sorted(range(len(det_list)), key=lambda i: (-det_list[i][0], i))
    free = set(range(len(gt_list)))
    result = {}
    for di in order:
        best_gi, best_iou = None, 0.0
        for gi in sorted(free):
            iou = iou_fn(det_list[di][1], gt_list[gi])
            if iou >= iou_t and iou > best_iou:
                best_gi, best_iou = gi, iou
        if best_gi is not None:
            free.discard(best_gi)
            result[di] = best_gi
    return result


def dbscan_oracle(points: np.ndarray, eps: float, min_pts: int) -> np.ndarray:
    """Density clustering from an explicit adjacency matrix.

    Cores are points with >= min_pts neighbors (self included);
    clusters are grown core-by-core in index order; border points take
    the first cluster that reaches them.
    """
    n = len(points)
    labels = np.full(n, -1, dtype=np.int64)
    if n == 0:
        return labels
    diff = points[:, None, :] - points[None, :, :]
    adj = (diff ** 2).sum(axis=2) <= eps * eps
    degree = adj.sum(axis=1)
    is_core = degree >= min_pts
    cluster = 0
    for start in range(n):
        if labels[start] != -1 or not is_core[start]:
            continue
        labels[start] = cluster
        pending = [int(q) for q in np.flatnonzero(adj[start]) if labels[q] == -1]
        for q in pending:
            labels[q] = cluster
        while pending:
            j = pending.pop(0)
            if not is_core[j]:
                continue
            for q in np.flatnonzero(adj[j]):
                if labels[q] == -1:
                    labels[q] = cluster
                    pending.append(int(q))
        cluster += 1
    return labels


def canonical_labels(labels) -> list[int]:
    """Renumber cluster ids by first appearance; noise (-1) unchanged."""
    mapping = {}
    out = []
    for lab in labels:
        lab = int(lab)
        if lab < 0:
            out.append(-1)
            continue
        if lab not in mapping:
            mapping[lab] = len(mapping)
        out.append(mapping[lab])
    return out
