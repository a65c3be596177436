"""Backend selection for the hot kernels.

Set CLUTTERKIT_BACKEND=numpy to force the pure-numpy fallback path, or
CLUTTERKIT_BACKEND=numba to require the compiled path (ImportError if
numba is missing). Unset, the compiled path is used when available.

benchmarks/compare_backends.py times the two implementations head to
head; tests/test_backends.py asserts they agree.
"""

from __future__ import annotations

import os

_requested = os.environ.get("CLUTTERKIT_BACKEND", "").strip().lower()
if _requested not in ("", "numpy", "numba"):
    raise ValueError(
        f"CLUTTERKIT_BACKEND must be 'numpy' or 'numba', got {_requested!r}"
    )

if _requested == "numpy":
    from . import numpy_impl as _impl
elif _requested == "numba":
    from . import numba_impl as _impl
else:
    try:
        from . import numba_impl as _impl
    except ImportError:
        from . import numpy_impl as _impl

BACKEND = _impl.BACKEND
rle_encode_flat = _impl.rle_encode_flat
rle_decode_flat = _impl.rle_decode_flat
label_components = _impl.label_components
kmeans_assign = _impl.kmeans_assign
dbscan_labels = _impl.dbscan_labels
ransac_best_triple = _impl.ransac_best_triple
backproject_pixels = _impl.backproject_pixels
knn_covariances = _impl.knn_covariances
