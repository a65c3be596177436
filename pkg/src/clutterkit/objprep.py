"""Self-annotation of white-background object images.

A pixel is background iff all three channels sit at or above the white
threshold; everything else is the object. The raw threshold mask is
cleaned by dropping small 4-connected components and keeping the
largest survivor, then cropped to a tight patch + mask cutout ready
for scene composition.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels, rle
from .core import as_mask, as_rgb, category_id, category_name, load_rgb, mask_bbox, save_rgb
from .errors import DimensionMismatchError, EmptyMaskError

DEFAULT_WHITE_THRESHOLD = 240   # tolerates ringing at compressed object borders
DEFAULT_MIN_COMPONENT_AREA = 16  # for 64x64 inputs; drops speckle, keeps thin stems

MANIFEST_NAME = "objects.json"
TIMING_NAME = "timing.json"


@dataclass(frozen=True)
class AnnotatedObject:
    """A cutout: tight image patch, its binary mask, and a category."""

    patch: np.ndarray
    mask: np.ndarray
    category: int
    source_id: str


def extract_mask(image: np.ndarray, thresh: int = DEFAULT_WHITE_THRESHOLD) -> np.ndarray:
    """Foreground mask: bit set iff any channel falls below the threshold."""
    image = as_rgb(image)
    if not 0 < thresh <= 255:
        raise ValueError(f"white threshold must be in (0, 255], got {thresh}")
    return ~(image >= thresh).all(axis=2)


def clean_mask(mask: np.ndarray, min_component_area: int = DEFAULT_MIN_COMPONENT_AREA) -> np.ndarray:
    """Largest 4-connected component, provided it reaches the area floor.

    Ties on area keep the component seen first in row-major scan order.
    Raises EmptyMask if no component reaches min_component_area.
    """
    mask = as_mask(mask)
    labels = kernels.label_components(np.ascontiguousarray(mask.view(np.uint8)))
    ids, first_seen = np.unique(labels[labels > 0], return_index=True)
    if ids.size == 0:
        raise EmptyMaskError("mask has no foreground components")
    areas = np.bincount(labels.ravel())[ids]
    keep = areas >= min_component_area
    if not keep.any():
        raise EmptyMaskError(
            f"no component reaches min area {min_component_area} "
            f"(largest is {int(areas.max())})"
        )
    # among the survivors, largest area wins; ties -> first in scan order
    scan_order = np.argsort(first_seen[keep], kind="stable")
    cand_ids = ids[keep][scan_order]
    cand_areas = areas[keep][scan_order]
    best = cand_ids[int(np.argmax(cand_areas))]
    return labels == best


def make_cutout(image: np.ndarray, mask: np.ndarray, category: int) -> AnnotatedObject:
    """Crop patch and mask to the mask's bounding box, pixels verbatim."""
    image = as_rgb(image)
    mask = as_mask(mask)
    if image.shape[:2] != mask.shape:
        raise DimensionMismatchError(
            f"image {image.shape[:2]} vs mask {mask.shape}"
        )
    box = mask_bbox(mask)   # raises EmptyMask on an empty mask
    category_name(category)  # validates the id
    patch = image[box.y:box.y + box.h, box.x:box.x + box.w].copy()
    cut = mask[box.y:box.y + box.h, box.x:box.x + box.w].copy()
    return AnnotatedObject(patch=patch, mask=cut, category=category, source_id="")


def annotate_image(image: np.ndarray, category: int,
                   thresh: int = DEFAULT_WHITE_THRESHOLD,
                   min_area: int = DEFAULT_MIN_COMPONENT_AREA) -> AnnotatedObject:
    """extract -> clean -> cutout, the full self-annotation of one image."""
    return make_cutout(image, clean_mask(extract_mask(image, thresh), min_area), category)


def annotate_directory(in_dir: str | Path, out_dir: str | Path, category: str,
                       thresh: int = DEFAULT_WHITE_THRESHOLD,
                       min_area: int = DEFAULT_MIN_COMPONENT_AREA) -> dict:
    """Self-annotate every PNG in a directory.

    Writes one patch PNG per object plus a manifest with RLE masks.
    Per-image wall-clock latency goes to a separate timing file so the
    manifest stays byte-stable across runs. Images whose mask cleanup
    fails are skipped and listed in the manifest.
    """
    in_dir = Path(in_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    cid = category_id(category)

    entries = []
    skipped = []
    latencies_ms = []
    for path in sorted(in_dir.glob("*.png")):
        image = load_rgb(path)
        t0 = time.perf_counter()
        try:
            obj = annotate_image(image, cid, thresh, min_area)
        except EmptyMaskError as exc:
            skipped.append({"source": path.name, "reason": str(exc)})
            continue
        latencies_ms.append((time.perf_counter() - t0) * 1000.0)
        patch_name = f"{path.stem}__patch.png"
        save_rgb(out_dir / patch_name, obj.patch)
        entries.append({
            "source_id": path.stem,
            "patch": patch_name,
            "mask": rle.mask_to_coco(obj.mask),
            "category_id": cid,
            "category": category_name(cid),
            "area": int(obj.mask.sum()),
        })

    manifest = {
        "white_threshold": thresh,
        "min_component_area": min_area,
        "objects": entries,
        "skipped": skipped,
    }
    with open(out_dir / MANIFEST_NAME, "w") as f:
        json.dump(manifest, f, indent=2)
        f.write("\n")
    timing = {
        "count": len(latencies_ms),
        "mean_ms": float(np.mean(latencies_ms)) if latencies_ms else 0.0,
    }
    with open(out_dir / TIMING_NAME, "w") as f:
        json.dump(timing, f, indent=2)
        f.write("\n")
    return manifest


def load_objects(manifest_dir: str | Path) -> list[AnnotatedObject]:
    """Load cutouts written by annotate_directory, in manifest order."""
    manifest_dir = Path(manifest_dir)
    with open(manifest_dir / MANIFEST_NAME) as f:
        manifest = json.load(f)
    objects = []
    for entry in manifest["objects"]:
        patch = load_rgb(manifest_dir / entry["patch"])
        mask = rle.coco_to_mask(entry["mask"])
        if patch.shape[:2] != mask.shape:
            raise DimensionMismatchError(
                f"{entry['patch']}: patch {patch.shape[:2]} vs mask {mask.shape}"
            )
        objects.append(AnnotatedObject(
            patch=patch, mask=mask,
            category=int(entry["category_id"]),
            source_id=entry["source_id"],
        ))
    return objects
