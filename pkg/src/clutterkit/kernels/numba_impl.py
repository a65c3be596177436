"""Numba-compiled twins of the hot kernels.

Same signatures and results as numpy_impl; @njit(cache=True) so the
compile cost is paid once per machine.
"""

from __future__ import annotations

import numpy as np
from numba import njit

BACKEND = "numba"


@njit(cache=True)
def rle_encode_flat(flat):
    n = flat.size
    counts = np.empty(n + 1, dtype=np.int64)
    m = 0
    run = 0
    cur = 0
    for i in range(n):
        if flat[i] == cur:
            run += 1
        else:
            counts[m] = run
            m += 1
            run = 1
            cur = 1 - cur
    counts[m] = run
    m += 1
    return counts[:m].copy()


@njit(cache=True)
def _rle_decode_flat(counts, n):
    out = np.zeros(n, dtype=np.uint8)
    pos = 0
    val = np.uint8(0)
    for c in counts:
        if pos + c > n:
            return out[:0]      # overflow flag: empty result
        if val:
            out[pos:pos + c] = 1
        pos += c
        val = np.uint8(1) - val
    if pos != n:
        return out[:0]
    return out


def rle_decode_flat(counts, n):
    counts = np.ascontiguousarray(counts, dtype=np.int64)
    out = _rle_decode_flat(counts, n)
    if out.size != n:
        raise ValueError("run-length counts do not sum to the pixel count")
    return out


@njit(cache=True)
def label_components(mask):
    h, w = mask.shape
    labels = np.zeros((h, w), dtype=np.int64)
    stack = np.empty(h * w, dtype=np.int64)
    cur = 0
    for r0 in range(h):
        for c0 in range(w):
            if mask[r0, c0] == 0 or labels[r0, c0] != 0:
                continue
            cur += 1
            top = 0
            stack[top] = r0 * w + c0
            top += 1
            labels[r0, c0] = cur
            while top > 0:
                top -= 1
                p = stack[top]
                r = p // w
                c = p % w
                if r > 0 and mask[r - 1, c] != 0 and labels[r - 1, c] == 0:
                    labels[r - 1, c] = cur
                    stack[top] = p - w
                    top += 1
                if r + 1 < h and mask[r + 1, c] != 0 and labels[r + 1, c] == 0:
                    labels[r + 1, c] = cur
                    stack[top] = p + w
                    top += 1
                if c > 0 and mask[r, c - 1] != 0 and labels[r, c - 1] == 0:
                    labels[r, c - 1] = cur
                    stack[top] = p - 1
                    top += 1
                if c + 1 < w and mask[r, c + 1] != 0 and labels[r, c + 1] == 0:
                    labels[r, c + 1] = cur
                    stack[top] = p + 1
                    top += 1
    return labels


@njit(cache=True)
def kmeans_assign(points, centroids):
    n = points.shape[0]
    k = centroids.shape[0]
    out = np.empty(n, dtype=np.int32)
    for i in range(n):
        best = 0
        best_d = np.inf
        for c in range(k):
            dx = points[i, 0] - centroids[c, 0]
            dy = points[i, 1] - centroids[c, 1]
            dz = points[i, 2] - centroids[c, 2]
            d = (dx * dx + dy * dy) + dz * dz
            if d < best_d:
                best_d = d
                best = c
        out[i] = best
    return out


@njit(cache=True)
def dbscan_labels(points, eps, min_pts):
    n = points.shape[0]
    labels = np.full(n, -1, dtype=np.int32)
    claimed = np.zeros(n, dtype=np.uint8)
    queue = np.empty(n, dtype=np.int64)
    neigh = np.empty(n, dtype=np.int64)
    eps2 = eps * eps
    cluster = 0
    for i in range(n):
        if claimed[i] == 1:
            continue
        cnt = 0
        for j in range(n):
            dx = points[j, 0] - points[i, 0]
            dy = points[j, 1] - points[i, 1]
            dz = points[j, 2] - points[i, 2]
            if dx * dx + dy * dy + dz * dz <= eps2:
                neigh[cnt] = j
                cnt += 1
        if cnt < min_pts:
            continue
        labels[i] = cluster
        claimed[i] = 1
        tail = 0
        for q in range(cnt):
            j = neigh[q]
            if claimed[j] == 0:
                claimed[j] = 1
                queue[tail] = j
                tail += 1
        head = 0
        while head < tail:
            j = queue[head]
            head += 1
            labels[j] = cluster
            jcnt = 0
            for q in range(n):
                dx = points[q, 0] - points[j, 0]
                dy = points[q, 1] - points[j, 1]
                dz = points[q, 2] - points[j, 2]
                if dx * dx + dy * dy + dz * dz <= eps2:
                    neigh[jcnt] = q
                    jcnt += 1
            if jcnt >= min_pts:
                for q in range(jcnt):
                    p = neigh[q]
                    if claimed[p] == 0:
                        claimed[p] = 1
                        queue[tail] = p
                        tail += 1
        cluster += 1
    return labels


@njit(cache=True)
def ransac_best_triple(points, triples, dist):
    n = points.shape[0]
    best = -1
    best_count = 0
    for t in range(triples.shape[0]):
        i = triples[t, 0]
        j = triples[t, 1]
        k = triples[t, 2]
        v1x = points[j, 0] - points[i, 0]
        v1y = points[j, 1] - points[i, 1]
        v1z = points[j, 2] - points[i, 2]
        v2x = points[k, 0] - points[i, 0]
        v2y = points[k, 1] - points[i, 1]
        v2z = points[k, 2] - points[i, 2]
        nx = v1y * v2z - v1z * v2y
        ny = v1z * v2x - v1x * v2z
        nz = v1x * v2y - v1y * v2x
        norm = np.sqrt(nx * nx + ny * ny + nz * nz)
        if norm < 1e-12:
            continue
        a = nx / norm
        b = ny / norm
        c = nz / norm
        d = -(a * points[i, 0] + b * points[i, 1] + c * points[i, 2])
        count = 0
        for p in range(n):
            r = ((a * points[p, 0]) + (b * points[p, 1])) + (c * points[p, 2]) + d
            if abs(r) <= dist:
                count += 1
        if count > best_count:
            best = t
            best_count = count
    return best


@njit(cache=True)
def backproject_pixels(depth, roi, fx, fy, cx, cy):
    h, w = depth.shape
    total = 0
    for v in range(h):
        for u in range(w):
            if depth[v, u] > 0 and roi[v, u] > 0:
                total += 1
    pts = np.empty((total, 3), dtype=np.float64)
    pix = np.empty((total, 2), dtype=np.int32)
    m = 0
    for v in range(h):
        for u in range(w):
            if depth[v, u] > 0 and roi[v, u] > 0:
                z = depth[v, u] / 1000.0
                pts[m, 0] = (u - cx) * z / fx
                pts[m, 1] = (v - cy) * z / fy
                pts[m, 2] = z
                pix[m, 0] = u
                pix[m, 1] = v
                m += 1
    return pts, pix


@njit(cache=True)
def knn_covariances(points, k):
    n = points.shape[0]
    covs = np.empty((n, 3, 3), dtype=np.float64)
    d2 = np.empty(n, dtype=np.float64)
    for i in range(n):
        for j in range(n):
            dx = points[j, 0] - points[i, 0]
            dy = points[j, 1] - points[i, 1]
            dz = points[j, 2] - points[i, 2]
            d2[j] = dx * dx + dy * dy + dz * dz
        order = np.argsort(d2, kind="mergesort")
        mx = 0.0
        my = 0.0
        mz = 0.0
        for q in range(k):
            p = order[q]
            mx += points[p, 0]
            my += points[p, 1]
            mz += points[p, 2]
        mx /= k
        my /= k
        mz /= k
        cxx = 0.0
        cxy = 0.0
        cxz = 0.0
        cyy = 0.0
        cyz = 0.0
        czz = 0.0
        for q in range(k):
            p = order[q]
            dx = points[p, 0] - mx
            dy = points[p, 1] - my
            dz = points[p, 2] - mz
            cxx += dx * dx
            cxy += dx * dy
            cxz += dx * dz
            cyy += dy * dy
            cyz += dy * dz
            czz += dz * dz
        covs[i, 0, 0] = cxx / k
        covs[i, 0, 1] = cxy / k
        covs[i, 0, 2] = cxz / k
        covs[i, 1, 0] = cxy / k
        covs[i, 1, 1] = cyy / k
        covs[i, 1, 2] = cyz / k
        covs[i, 2, 0] = cxz / k
        covs[i, 2, 1] = cyz / k
        covs[i, 2, 2] = czz / k
    return covs
