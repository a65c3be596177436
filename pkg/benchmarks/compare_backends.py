"""Head-to-head timing of the numba kernels against the numpy fallbacks.

Usage: python benchmarks/compare_backends.py [--repeats N]

Compiles the numba kernels first (untimed warm-up), then times both
implementations on representative workloads and prints a table with
speedups. The same arrays feed both paths, so the outputs are also
cross-checked here.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from clutterkit.kernels import numpy_impl
from clutterkit.rng import Rng

try:
    from clutterkit.kernels import numba_impl
except ImportError:
    numba_impl = None


def _noise_mask(seed: int, h: int, w: int, density: float) -> np.ndarray:
    rng = Rng(seed)
    m = np.zeros(h * w, dtype=np.uint8)
    for i in range(h * w):
        m[i] = 1 if rng.random() < density else 0
    return m.reshape(h, w)


def _points(seed: int, n: int) -> np.ndarray:
    rng = Rng(seed)
    return np.array([[rng.uniform(0, 0.4), rng.uniform(0, 0.4),
                      rng.uniform(0.3, 0.9)] for _ in range(n)])


def build_workloads():
    mask = _noise_mask(1, 720, 1280, 0.35)
    flat = np.ascontiguousarray(mask.ravel(order="F"))
    # label_components runs on object-wise images, so benchmark that size;
    # the numpy fallback is diameter-bound and not meant for full scenes
    blob = _noise_mask(7, 64, 64, 0.45)
    pts = _points(2, 4000)
    cents = _points(3, 12)
    depth = (np.abs(np.sin(np.arange(720 * 1280).reshape(720, 1280) * 0.37))
             * 3000).astype(np.uint16)
    roi = np.ones((720, 1280), dtype=np.uint8)
    rng = Rng(4)
    plane_pts = _points(5, 5000)
    plane_pts[:, 2] = 0.5 + 0.0001 * plane_pts[:, 0]
    triples = np.array([rng.distinct_triple(len(plane_pts)) for _ in range(1000)],
                       dtype=np.int64)
    knn_pts = _points(6, 1200)
    counts = numpy_impl.rle_encode_flat(flat)
    return [
        ("rle_encode 720p mask", "rle_encode_flat", (flat,)),
        ("rle_decode 720p mask", "rle_decode_flat", (counts, flat.size)),
        ("label_components 64x64", "label_components", (blob,)),
        ("kmeans_assign 4k x 12", "kmeans_assign", (pts, cents)),
        ("dbscan 4k points", "dbscan_labels", (pts, 0.03, 8)),
        ("ransac 1000 x 5k", "ransac_best_triple", (plane_pts, triples, 0.005)),
        ("backproject 720p", "backproject_pixels", (depth, roi, 600.0, 600.0, 640.0, 360.0)),
        ("knn_covariances 1.2k k=30", "knn_covariances", (knn_pts, 30)),
    ]


def time_call(fn, args, repeats):
    best = np.inf
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def _canonical(labels):
    out = np.zeros_like(labels)
    mapping = {}
    flat = labels.ravel()
    canon = out.ravel()
    for i, lab in enumerate(flat):
        if lab <= 0:
            continue
        if lab not in mapping:
            mapping[lab] = len(mapping) + 1
        canon[i] = mapping[lab]
    return out


def check_agreement(fname, a, b):
    if isinstance(a, tuple):
        return all(check_agreement(fname, x, y) for x, y in zip(a, b))
    a = np.asarray(a)
    b = np.asarray(b)
    if fname == "label_components":
        # label ids are backend-arbitrary; compare component structure
        return np.array_equal(_canonical(a), _canonical(b))
    if a.dtype.kind in "iub":
        return np.array_equal(a, b)
    return np.allclose(a, b, atol=1e-12)


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeats", type=int, default=3)
    args = parser.parse_args()

    workloads = build_workloads()
    print(f"{'workload':30s} {'numpy':>10s} {'numba':>10s} {'speedup':>8s}  agree")
    print("-" * 70)
    for label, fname, fargs in workloads:
        np_fn = getattr(numpy_impl, fname)
        np_out = np_fn(*fargs)
        np_t = time_call(np_fn, fargs, args.repeats)
        if numba_impl is None:
            print(f"{label:30s} {np_t * 1e3:9.2f}ms {'n/a':>10s} {'':>8s}")
            continue
        nb_fn = getattr(numba_impl, fname)
        nb_out = nb_fn(*fargs)          # includes one-off compile
        nb_t = time_call(nb_fn, fargs, args.repeats)
        agree = check_agreement(fname, np_out, nb_out)
        print(f"{label:30s} {np_t * 1e3:9.2f}ms {nb_t * 1e3:9.2f}ms "
              f"{np_t / nb_t:7.1f}x  {agree}")


if __name__ == "__main__":
    main()
