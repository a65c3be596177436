"""The numba kernels and the pure-numpy fallbacks must agree.

Integer outputs must match exactly; float pipelines that reduce in a
different order (covariances) get a tight tolerance.
"""

import numpy as np
import pytest

from clutterkit.kernels import numpy_impl
from clutterkit.rng import Rng
from util import canonical_labels, random_mask

numba_impl = pytest.importorskip("clutterkit.kernels.numba_impl")

BACKENDS = (numpy_impl, numba_impl)


def test_rle_encode_decode_equal():
    for seed in range(40):
        h = 1 + seed % 9
        w = 1 + (seed * 3) % 11
        flat = np.ascontiguousarray(
            random_mask(seed, h, w, 0.1 + (seed % 8) / 10).ravel(order="F")
        ).view(np.uint8)
        a = numpy_impl.rle_encode_flat(flat)
        b = numba_impl.rle_encode_flat(flat)
        assert a.tolist() == b.tolist()
        da = numpy_impl.rle_decode_flat(a, flat.size)
        db = numba_impl.rle_decode_flat(a, flat.size)
        assert np.array_equal(da, db)
        assert np.array_equal(da, flat)


def test_label_components_equal_after_canonicalization():
    for seed in range(30):
        mask = random_mask(seed, 20, 24, 0.45).view(np.uint8)
        la = numpy_impl.label_components(np.ascontiguousarray(mask))
        lb = numba_impl.label_components(np.ascontiguousarray(mask))
        assert canonical_labels(la.ravel() - 1) == canonical_labels(lb.ravel() - 1)


def _random_points(seed, n, scale=0.2):
    rng = Rng(seed)
    return np.array([[rng.uniform(0, scale), rng.uniform(0, scale),
                      rng.uniform(0.3, 0.7)] for _ in range(n)])


def test_kmeans_assign_equal():
    for seed in range(20):
        pts = _random_points(seed, 60)
        cents = _random_points(seed + 500, 5)
        a = numpy_impl.kmeans_assign(pts, cents)
        b = numba_impl.kmeans_assign(pts, cents)
        assert np.array_equal(a, b)


def test_dbscan_labels_equal():
    for seed in range(30):
        rng = Rng(seed)
        n = rng.randint(0, 40)
        pts = _random_points(seed + 100, n) if n else np.zeros((0, 3))
        eps = rng.uniform(0.02, 0.08)
        min_pts = rng.randint(1, 5)
        a = numpy_impl.dbscan_labels(pts, eps, min_pts)
        b = numba_impl.dbscan_labels(pts, eps, min_pts)
        assert np.array_equal(a, b)


def test_ransac_best_triple_equal():
    for seed in range(10):
        rng = Rng(seed)
        base = _random_points(seed, 80, scale=0.3)
        base[:, 2] = 0.5 + 0.001 * base[:, 0]   # near-planar with spread
        triples = np.array([rng.distinct_triple(len(base)) for _ in range(200)],
                           dtype=np.int64)
        a = numpy_impl.ransac_best_triple(base, triples, 0.003)
        b = numba_impl.ransac_best_triple(base, triples, 0.003)
        assert a == b


def test_backproject_pixels_equal():
    rng = Rng(3)
    depth = np.zeros((40, 50), dtype=np.uint16)
    for _ in range(400):
        depth[rng.randint(0, 39), rng.randint(0, 49)] = rng.randint(100, 4000)
    roi = random_mask(4, 40, 50, 0.7).view(np.uint8)
    args = (np.ascontiguousarray(depth), np.ascontiguousarray(roi),
            525.0, 520.0, 25.0, 20.0)
    pa, ra = numpy_impl.backproject_pixels(*args)
    pb, rb = numba_impl.backproject_pixels(*args)
    assert np.array_equal(ra, rb)
    assert np.array_equal(pa, pb)   # identical IEEE ops, bit-exact


def test_knn_covariances_close():
    for seed in range(8):
        pts = _random_points(seed, 50)
        ca = numpy_impl.knn_covariances(pts, 12)
        cb = numba_impl.knn_covariances(pts, 12)
        assert np.allclose(ca, cb, atol=1e-15)
        # identical normals after shared eigen step
        _, va = np.linalg.eigh(ca)
        _, vb = np.linalg.eigh(cb)
        dots = np.abs((va[:, :, 0] * vb[:, :, 0]).sum(axis=1))
        assert dots.min() > 1 - 1e-9


def test_backend_env_flag(tmp_path, monkeypatch):
    import subprocess
    import sys
    code = "from clutterkit import kernels; print(kernels.BACKEND)"
    for flag, expect in (("numpy", "numpy"), ("numba", "numba"), ("", "numba")):
        env = dict(__import__("os").environ)
        if flag:
            env["CLUTTERKIT_BACKEND"] = flag
        else:
            env.pop("CLUTTERKIT_BACKEND", None)
        out = subprocess.run([sys.executable, "-c", code], env=env,
                             capture_output=True, text=True)
        assert out.stdout.strip() == expect, out.stderr
