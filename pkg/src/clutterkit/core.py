"""Core raster containers, geometry primitives, and PNG I/O.

Array conventions used everywhere:
  RGB image   (H, W, 3) uint8, row-major
  depth image (H, W) uint16, millimeters, 0 = invalid pixel
  binary mask (H, W) bool, dimensions equal to the raster it annotates

All values are treated as immutable after construction; functions
return fresh arrays rather than mutating inputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import DimensionMismatchError, EmptyMaskError

# Category ids are 1-based; 0 is reserved for background.
CATEGORY_NAMES = {
    1: "apple",
    2: "banana",
    3: "strawberry",
    4: "orange",
    5: "peach",
    6: "plum",
}
CATEGORY_IDS = {name: cid for cid, name in CATEGORY_NAMES.items()}


def category_name(cid: int) -> str:
    if cid not in CATEGORY_NAMES:
        raise ValueError(f"unknown category id {cid}")
    return CATEGORY_NAMES[cid]


def category_id(name: str) -> int:
    key = name.strip().lower()
    if key not in CATEGORY_IDS:
        raise ValueError(f"unknown category name {name!r}")
    return CATEGORY_IDS[key]


def as_rgb(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.ndim != 3 or arr.shape[2] != 3 or arr.dtype != np.uint8:
        raise ValueError(f"expected (H, W, 3) uint8 image, got {arr.shape} {arr.dtype}")
    if arr.shape[0] < 1 or arr.shape[1] < 1:
        raise ValueError("image dimensions must be >= 1")
    return arr


def as_depth(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.ndim != 2 or arr.dtype != np.uint16:
        raise ValueError(f"expected (H, W) uint16 depth, got {arr.shape} {arr.dtype}")
    return arr


def as_mask(arr: np.ndarray) -> np.ndarray:
    arr = np.asarray(arr)
    if arr.ndim != 2:
        raise ValueError(f"expected (H, W) mask, got shape {arr.shape}")
    if arr.dtype != bool:
        arr = arr.astype(bool)
    return arr


def check_same_dims(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape[:2] != b.shape[:2]:
        raise DimensionMismatchError(f"dimensions differ: {a.shape[:2]} vs {b.shape[:2]}")


@dataclass(frozen=True)
class Bbox:
    """Axis-aligned box: top-left corner plus size, in pixels."""

    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError(f"box size must be >= 1, got {self.w}x{self.h}")

    def as_list(self) -> list[int]:
        return [self.x, self.y, self.w, self.h]

    @property
    def area(self) -> int:
        return self.w * self.h


def mask_bbox(mask: np.ndarray) -> Bbox:
    """Tight bounding box of the set pixels."""
    mask = as_mask(mask)
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        raise EmptyMaskError("cannot bound an empty mask")
    return Bbox(
        x=int(cols[0]),
        y=int(rows[0]),
        w=int(cols[-1] - cols[0] + 1),
        h=int(rows[-1] - rows[0] + 1),
    )


@dataclass(frozen=True)
class CameraIntrinsics:
    """Pinhole intrinsics: focal lengths and principal point, in pixels."""

    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")

    def to_dict(self) -> dict:
        return {"fx": self.fx, "fy": self.fy, "cx": self.cx, "cy": self.cy}

    @classmethod
    def from_dict(cls, data: dict) -> "CameraIntrinsics":
        return cls(fx=float(data["fx"]), fy=float(data["fy"]),
                   cx=float(data["cx"]), cy=float(data["cy"]))

    @classmethod
    def load(cls, path: str | Path) -> "CameraIntrinsics":
        with open(path) as f:
            return cls.from_dict(json.load(f))


def load_rgb(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        return as_rgb(np.asarray(im.convert("RGB")))


def save_rgb(path: str | Path, image: np.ndarray) -> None:
    Image.fromarray(as_rgb(image)).save(path, format="PNG")


def load_depth(path: str | Path) -> np.ndarray:
    with Image.open(path) as im:
        arr = np.asarray(im)
    if arr.dtype == np.int32:        # PIL mode "I" for some 16-bit files
        arr = arr.astype(np.uint16)
    return as_depth(arr)


def save_depth(path: str | Path, depth: np.ndarray) -> None:
    Image.fromarray(as_depth(depth)).save(path, format="PNG")


def resize_nearest(arr: np.ndarray, new_h: int, new_w: int) -> np.ndarray:
    """Nearest-neighbor resize for images and masks.

    Pixel centers map through the scale so that resizing preserves the
    geometry of the content; used for patch/mask scaling so the pair
    stays aligned and masks stay binary.
    """
    if new_h < 1 or new_w < 1:
        raise ValueError("target size must be >= 1")
    h, w = arr.shape[:2]
    rows = np.clip(((np.arange(new_h) + 0.5) * h / new_h - 0.5).round().astype(np.int64), 0, h - 1)
    cols = np.clip(((np.arange(new_w) + 0.5) * w / new_w - 0.5).round().astype(np.int64), 0, w - 1)
    return arr[rows][:, cols]


def rotated_canvas(h: int, w: int, degrees: float) -> tuple[int, int]:
    """Canvas size (h, w) that fully contains a rotated h-by-w raster."""
    theta = np.deg2rad(degrees)
    c, s = np.cos(theta), np.sin(theta)
    # snap away trig noise so quarter turns keep exact canvases
    new_h = np.ceil(np.round(abs(w * s) + abs(h * c), 9))
    new_w = np.ceil(np.round(abs(w * c) + abs(h * s), 9))
    return int(new_h), int(new_w)


def rotate_nearest(arr: np.ndarray, degrees: float, fill=0) -> np.ndarray:
    """Rotate counter-clockwise about the center, expanding the canvas.

    Inverse-mapping nearest-neighbor; out-of-source pixels get `fill`.
    """
    h, w = arr.shape[:2]
    theta = np.deg2rad(degrees)
    c, s = np.cos(theta), np.sin(theta)
    new_h, new_w = rotated_canvas(h, w, degrees)
    yy, xx = np.mgrid[0:new_h, 0:new_w]
    # map destination pixel centers back into source coordinates
    dx = xx + 0.5 - new_w / 2.0
    dy = yy + 0.5 - new_h / 2.0
    sx = c * dx - s * dy + w / 2.0 - 0.5
    sy = s * dx + c * dy + h / 2.0 - 0.5
    src_x = np.round(sx).astype(np.int64)
    src_y = np.round(sy).astype(np.int64)
    inside = (src_x >= 0) & (src_x < w) & (src_y >= 0) & (src_y < h)
    out_shape = (new_h, new_w) + arr.shape[2:]
    out = np.full(out_shape, fill, dtype=arr.dtype)
    out[inside] = arr[src_y[inside], src_x[inside]]
    return out
