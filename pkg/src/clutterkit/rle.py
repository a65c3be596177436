"""Column-major uncompressed run-length encoding for binary masks.

Counts alternate background/foreground runs over the column-major
pixel traversal and always start with a (possibly zero) background
run. This integer-list form goes straight into annotation JSON and is
bit-exact by construction, which the golden-file tests rely on.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .core import as_mask


def encode_mask(mask: np.ndarray) -> list[int]:
    mask = as_mask(mask)
    flat = np.ascontiguousarray(mask.ravel(order="F")).view(np.uint8)
    return [int(c) for c in kernels.rle_encode_flat(flat)]


def decode_mask(counts: list[int], height: int, width: int) -> np.ndarray:
    if height < 1 or width < 1:
        raise ValueError("mask dimensions must be >= 1")
    arr = np.asarray(counts, dtype=np.int64)
    if arr.size and arr.min() < 0:
        raise ValueError("run-length counts must be non-negative")
    flat = kernels.rle_decode_flat(arr, height * width)
    return flat.reshape((width, height)).T.astype(bool)


def mask_to_coco(mask: np.ndarray) -> dict:
    """RLE record in the {size, counts} shape used by the dataset JSON."""
    mask = as_mask(mask)
    return {"size": [int(mask.shape[0]), int(mask.shape[1])],
            "counts": encode_mask(mask)}


def coco_to_mask(record: dict) -> np.ndarray:
    h, w = record["size"]
    return decode_mask(record["counts"], int(h), int(w))
