import numpy as np
import pytest

from clutterkit import rle
from util import random_mask


def test_all_zeros_single_background_run():
    mask = np.zeros((2, 2), dtype=bool)
    assert rle.encode_mask(mask) == [4]


def test_all_ones_leading_zero_run():
    mask = np.ones((2, 2), dtype=bool)
    assert rle.encode_mask(mask) == [0, 4]


def test_single_pixel_column_major():
    # column-major traversal of a 2x2 with only (0,0) set: 1,0,0,0
    mask = np.zeros((2, 2), dtype=bool)
    mask[0, 0] = True
    assert rle.encode_mask(mask) == [0, 1, 3]


def test_column_major_order_hand_enumerated():
    # (row, col) set pixels: (1,0) and (0,1); column-major reads 0,1,1,0
    mask = np.zeros((2, 2), dtype=bool)
    mask[1, 0] = True
    mask[0, 1] = True
    assert rle.encode_mask(mask) == [1, 2, 1]


def test_roundtrip_random_masks():
    for seed in range(60):
        h = 1 + seed % 13
        w = 1 + (seed * 7) % 17
        mask = random_mask(seed, h, w, density=0.1 + 0.05 * (seed % 10))
        counts = rle.encode_mask(mask)
        assert sum(counts) == h * w
        back = rle.decode_mask(counts, h, w)
        assert np.array_equal(back, mask)


def test_decode_rejects_wrong_total():
    with pytest.raises(ValueError):
        rle.decode_mask([3], 2, 2)
    with pytest.raises(ValueError):
        rle.decode_mask([5], 2, 2)


def test_decode_rejects_negative_counts():
    with pytest.raises(ValueError):
        rle.decode_mask([-1, 5], 2, 2)


def test_coco_record_roundtrip():
    mask = random_mask(3, 9, 5, density=0.4)
    rec = rle.mask_to_coco(mask)
    assert rec["size"] == [9, 5]
    assert np.array_equal(rle.coco_to_mask(rec), mask)
