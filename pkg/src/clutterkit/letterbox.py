"""Aspect-preserving resize with zero padding, plus the coordinate map.

Images are scaled by min(target_w/w, target_h/h) and the remainder is
zero-padded, split evenly with the extra pixel on the right/bottom.
The returned transform carries annotations into letterboxed space and
back.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Bbox, as_rgb, resize_nearest


@dataclass(frozen=True)
class LetterboxTransform:
    scale: float
    pad_x: int
    pad_y: int
    src_w: int
    src_h: int
    dst_w: int
    dst_h: int

    def apply_point(self, x: float, y: float) -> tuple[float, float]:
        return x * self.scale + self.pad_x, y * self.scale + self.pad_y

    def invert_point(self, x: float, y: float) -> tuple[float, float]:
        return (x - self.pad_x) / self.scale, (y - self.pad_y) / self.scale

    def apply_bbox(self, box: Bbox) -> tuple[float, float, float, float]:
        x, y = self.apply_point(box.x, box.y)
        return x, y, box.w * self.scale, box.h * self.scale


def letterbox(image: np.ndarray, target_w: int, target_h: int):
    """Scale into (target_w, target_h) preserving aspect; zero-pad the rest.

    Returns the padded image and the annotation transform.
    """
    image = as_rgb(image)
    if target_w < 1 or target_h < 1:
        raise ValueError("target dimensions must be >= 1")
    h, w = image.shape[:2]
    scale = min(target_w / w, target_h / h)
    new_w = max(1, round(w * scale))
    new_h = max(1, round(h * scale))
    scaled = image if (new_w, new_h) == (w, h) else resize_nearest(image, new_h, new_w)
    pad_x = (target_w - new_w) // 2
    pad_y = (target_h - new_h) // 2
    out = np.zeros((target_h, target_w, 3), dtype=np.uint8)
    out[pad_y:pad_y + new_h, pad_x:pad_x + new_w] = scaled
    tf = LetterboxTransform(scale=scale, pad_x=pad_x, pad_y=pad_y,
                            src_w=w, src_h=h, dst_w=target_w, dst_h=target_h)
    return out, tf
