import numpy as np

from clutterkit.letterbox import letterbox
from util import noise_background


def test_identity_when_sizes_match():
    img = noise_background(1, 720, 1280)
    out, tf = letterbox(img, 1280, 720)
    assert np.array_equal(out, img)
    assert tf.scale == 1.0 and tf.pad_x == 0 and tf.pad_y == 0


def test_exact_ratio_no_padding():
    img = noise_background(2, 360, 640)
    out, tf = letterbox(img, 1280, 720)
    assert tf.scale == 2.0
    assert tf.pad_x == 0 and tf.pad_y == 0
    assert out.shape == (720, 1280, 3)


def test_square_into_wide_pads_width():
    # scale = min(1280/100, 720/100) = 7.2; content 720 wide, 280 px pads
    img = np.full((100, 100, 3), 200, dtype=np.uint8)
    out, tf = letterbox(img, 1280, 720)
    assert tf.scale == 7.2
    assert tf.pad_x == (1280 - 720) // 2 == 280
    assert tf.pad_y == 0
    # pixel-count oracle: non-zero pixels fill exactly the scaled content
    nonzero_cols = np.flatnonzero((out != 0).any(axis=(0, 2)))
    assert nonzero_cols[0] == 280 and nonzero_cols[-1] == 280 + 720 - 1
    assert int((out != 0).all(axis=2).sum()) == 720 * 720


def test_transform_round_trip_close():
    img = noise_background(3, 100, 100)
    _, tf = letterbox(img, 1280, 720)
    for x, y in [(0.0, 0.0), (99.0, 99.0), (12.25, 63.5)]:
        fx, fy = tf.apply_point(x, y)
        bx, by = tf.invert_point(fx, fy)
        assert abs(bx - x) < 1e-9
        assert abs(by - y) < 1e-9


def test_bbox_transform_matches_point_transform():
    img = noise_background(4, 50, 80)
    _, tf = letterbox(img, 1280, 720)
    from clutterkit.core import Bbox
    box = Bbox(4, 6, 20, 10)
    x, y, w, h = tf.apply_bbox(box)
    assert (x, y) == tf.apply_point(4, 6)
    assert w == 20 * tf.scale and h == 10 * tf.scale
