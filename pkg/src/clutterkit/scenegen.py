"""Synthetic scene composition with carried-along instance annotations.

Cutouts are scale-jittered, optionally flipped, and pasted onto random
background crops. Later pastes occlude earlier ones, so each instance's
visible mask is its pasted mask minus everything above it; instances
whose visible fraction falls below the visibility floor are dropped
from the annotations (their pixels stay in the image). Everything is
driven by seeded streams: scene i uses child stream i of the master
seed, so scenes can be built in parallel and still reproduce
byte-identically.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import rle
from .core import (
    CATEGORY_NAMES,
    Bbox,
    as_rgb,
    mask_bbox,
    resize_nearest,
    rotate_nearest,
    rotated_canvas,
    save_rgb,
)
from .errors import (
    DimensionMismatchError,
    DuplicateIdError,
    SceneTooSmallError,
    SourceTooSmallError,
)
from .objprep import DEFAULT_WHITE_THRESHOLD, AnnotatedObject
from .rng import Rng

SCALE_RETRIES = 20
ANNOTATION_FILE = "annotations.json"


@dataclass(frozen=True)
class SynthConfig:
    scene_w: int = 1280
    scene_h: int = 720
    n_instances: tuple[int, int] = (10, 10)
    scale_range: tuple[float, float] = (0.5, 2.0)
    flip_prob: float = 0.5
    rotate: bool = False
    visibility_floor: float = 0.05
    white_threshold: int = DEFAULT_WHITE_THRESHOLD
    photometric: bool = False
    geometric: bool = False

    def __post_init__(self):
        if self.scene_w < 1 or self.scene_h < 1:
            raise ValueError("scene dimensions must be >= 1")
        lo, hi = self.n_instances
        if not 0 <= lo <= hi:
            raise ValueError(f"bad instance count range {self.n_instances}")
        slo, shi = self.scale_range
        if not 0 < slo <= shi:
            raise ValueError(f"bad scale range {self.scale_range}")
        if not 0 <= self.flip_prob <= 1:
            raise ValueError("flip probability must be in [0, 1]")
        if not 0 <= self.visibility_floor < 1:
            raise ValueError("visibility floor must be in [0, 1)")


@dataclass(frozen=True)
class Placement:
    object_index: int
    scale: float
    flip_h: bool
    x: int
    y: int
    z_order: int
    rotation_deg: float = 0.0


@dataclass(frozen=True)
class SceneInstance:
    category: int
    visible_mask: np.ndarray
    bbox: Bbox
    full_area: int
    z_order: int


@dataclass(frozen=True)
class SceneAnnotation:
    scene_id: str
    image: np.ndarray
    instances: list[SceneInstance]
    background_source: str
    seed: int


def _transformed_dims(obj: AnnotatedObject, scale: float, rotation_deg: float) -> tuple[int, int]:
    h, w = obj.mask.shape
    if rotation_deg:
        h, w = rotated_canvas(h, w, rotation_deg)
    return max(1, round(h * scale)), max(1, round(w * scale))


def _transform_object(obj: AnnotatedObject, pl: Placement) -> tuple[np.ndarray, np.ndarray]:
    """Apply flip, then rotation, then nearest-neighbor scaling."""
    patch = obj.patch
    mask = obj.mask
    if pl.flip_h:
        patch = patch[:, ::-1]
        mask = mask[:, ::-1]
    if pl.rotation_deg:
        patch = rotate_nearest(patch, pl.rotation_deg, fill=0)
        mask = rotate_nearest(mask, pl.rotation_deg, fill=False)
    sh = max(1, round(mask.shape[0] * pl.scale))
    sw = max(1, round(mask.shape[1] * pl.scale))
    patch = resize_nearest(patch, sh, sw)
    mask = resize_nearest(mask, sh, sw)
    return patch, mask


def sample_placements(rng: Rng, cfg: SynthConfig, objects: list[AnnotatedObject]) -> list[Placement]:
    """Draw instance placements for one scene.

    Per instance the draw order is: object index, flip, rotation (when
    enabled), then scale retried up to SCALE_RETRIES times until the
    scaled patch fits the scene, then x and y uniform over the in-frame
    positions. z_order equals the sample index (later = on top).
    """
    if not objects:
        raise ValueError("no objects to place")
    n = rng.randint(*cfg.n_instances)
    placements = []
    for z in range(n):
        oi = rng.randbelow(len(objects))
        flip = rng.random() < cfg.flip_prob
        rot = rng.uniform(0.0, 360.0) if cfg.rotate else 0.0
        sh = sw = 0
        scale = cfg.scale_range[0]
        for attempt in range(SCALE_RETRIES):
            scale = rng.uniform(*cfg.scale_range)
            sh, sw = _transformed_dims(objects[oi], scale, rot)
            if sh <= cfg.scene_h and sw <= cfg.scene_w:
                break
        else:
            raise SceneTooSmallError(
                f"object {oi} does not fit {cfg.scene_w}x{cfg.scene_h} "
                f"after {SCALE_RETRIES} scale draws"
            )
        x = rng.randbelow(cfg.scene_w - sw + 1)
        y = rng.randbelow(cfg.scene_h - sh + 1)
        placements.append(Placement(object_index=oi, scale=scale, flip_h=flip,
                                    x=x, y=y, z_order=z, rotation_deg=rot))
    return placements


def compose_scene(background: np.ndarray, objects: list[AnnotatedObject],
                  placements: list[Placement], cfg: SynthConfig,
                  scene_id: str = "scene", background_source: str = "",
                  seed: int = 0) -> SceneAnnotation:
    """Paste placements in ascending z_order and clip occluded masks.

    Pixels under no pasted mask keep the background value. Instances
    left with zero visible pixels, or with a visible fraction below
    cfg.visibility_floor, are dropped from the annotation list while
    their painted pixels remain.
    """
    background = as_rgb(background)
    if background.shape[:2] != (cfg.scene_h, cfg.scene_w):
        raise DimensionMismatchError(
            f"background {background.shape[:2]} vs scene "
            f"{(cfg.scene_h, cfg.scene_w)}"
        )
    order = sorted(placements, key=lambda p: p.z_order)
    image = background.copy()
    owner = np.zeros(background.shape[:2], dtype=np.int32)
    full_areas = []
    categories = []
    for idx, pl in enumerate(order):
        obj = objects[pl.object_index]
        patch, mask = _transform_object(obj, pl)
        sh, sw = mask.shape
        if pl.x < 0 or pl.y < 0 or pl.x + sw > cfg.scene_w or pl.y + sh > cfg.scene_h:
            raise ValueError(f"placement {idx} falls outside the scene")
        img_region = image[pl.y:pl.y + sh, pl.x:pl.x + sw]
        img_region[mask] = patch[mask]
        owner_region = owner[pl.y:pl.y + sh, pl.x:pl.x + sw]
        owner_region[mask] = idx + 1
        full_areas.append(int(mask.sum()))
        categories.append(obj.category)

    instances = []
    for idx, pl in enumerate(order):
        visible = owner == idx + 1
        vis_area = int(visible.sum())
        if vis_area == 0:
            continue
        if vis_area / full_areas[idx] < cfg.visibility_floor:
            continue
        instances.append(SceneInstance(
            category=categories[idx],
            visible_mask=visible,
            bbox=mask_bbox(visible),
            full_area=full_areas[idx],
            z_order=pl.z_order,
        ))
    return SceneAnnotation(scene_id=scene_id, image=image, instances=instances,
                           background_source=background_source, seed=seed)


def crop_background(rng: Rng, source: np.ndarray, scene_w: int, scene_h: int) -> np.ndarray:
    """Uniform random crop of exactly scene_w x scene_h."""
    source = as_rgb(source)
    sh, sw = source.shape[:2]
    if sw < scene_w or sh < scene_h:
        raise SourceTooSmallError(
            f"background {sw}x{sh} smaller than scene {scene_w}x{scene_h}"
        )
    x = rng.randbelow(sw - scene_w + 1)
    y = rng.randbelow(sh - scene_h + 1)
    return source[y:y + scene_h, x:x + scene_w].copy()


def _gaussian_blur(image_f: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian with reflect padding; radius = ceil(3 sigma)."""
    radius = int(np.ceil(3.0 * sigma))
    if radius < 1:
        return image_f
    xs = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(xs * xs) / (2.0 * sigma * sigma))
    kernel /= kernel.sum()
    out = image_f
    for axis in (0, 1):
        pad = [(0, 0)] * out.ndim
        pad[axis] = (radius, radius)
        padded = np.pad(out, pad, mode="reflect")
        acc = np.zeros_like(out)
        for t, wgt in enumerate(kernel):
            sl = [slice(None)] * out.ndim
            sl[axis] = slice(t, t + out.shape[axis])
            acc += wgt * padded[tuple(sl)]
        out = acc
    return out


def augment(scene: SceneAnnotation, rng: Rng, cfg: SynthConfig) -> SceneAnnotation:
    """Annotation-consistent augmentation.

    Photometric: brightness and contrast scales in [0.8, 1.2],
    per-channel shift in [-10, 10], Gaussian blur sigma in [0, 1.5];
    masks and boxes untouched. Geometric: horizontal flip with
    probability 0.5, mirroring image, masks, and boxes together.
    Draw order: brightness, contrast, shifts (r, g, b), sigma, flip.
    """
    image = scene.image
    instances = scene.instances
    if cfg.photometric:
        brightness = rng.uniform(0.8, 1.2)
        contrast = rng.uniform(0.8, 1.2)
        shifts = np.array([rng.uniform(-10.0, 10.0) for _ in range(3)])
        sigma = rng.uniform(0.0, 1.5)
        img = image.astype(np.float64)
        img = img * brightness
        img = (img - 128.0) * contrast + 128.0
        img = img + shifts
        img = _gaussian_blur(img, sigma)
        image = np.clip(np.rint(img), 0, 255).astype(np.uint8)
    if cfg.geometric and rng.random() < 0.5:
        w = image.shape[1]
        image = np.ascontiguousarray(image[:, ::-1])
        instances = [
            replace(
                inst,
                visible_mask=np.ascontiguousarray(inst.visible_mask[:, ::-1]),
                bbox=Bbox(x=w - inst.bbox.x - inst.bbox.w, y=inst.bbox.y,
                          w=inst.bbox.w, h=inst.bbox.h),
            )
            for inst in instances
        ]
    return replace(scene, image=image, instances=instances)


def generate_scenes(objects: list[AnnotatedObject],
                    backgrounds: list[tuple[str, np.ndarray]],
                    cfg: SynthConfig, master_seed: int, n_scenes: int,
                    jobs: int = 1) -> list[SceneAnnotation]:
    """Build n_scenes scenes, scene i from child stream i of the seed.

    Per-scene draw order: background choice, crop x/y, placements,
    augmentation. Each scene is independent, so a thread pool yields
    the same artifacts as the sequential path.
    """
    if not backgrounds:
        raise ValueError("no background sources")
    master = Rng(master_seed)

    def build(i: int) -> SceneAnnotation:
        rng = master.child(i)
        name, source = backgrounds[rng.randbelow(len(backgrounds))]
        bg = crop_background(rng, source, cfg.scene_w, cfg.scene_h)
        placements = sample_placements(rng, cfg, objects)
        scene = compose_scene(bg, objects, placements, cfg,
                              scene_id=f"scene_{i:05d}",
                              background_source=name, seed=rng.seed)
        if cfg.photometric or cfg.geometric:
            scene = augment(scene, rng, cfg)
        return scene

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(build, range(n_scenes)))
    return [build(i) for i in range(n_scenes)]


def dataset_document(scenes: list[SceneAnnotation]) -> dict:
    """Annotation document: images, categories, annotations with RLE."""
    seen = set()
    for scene in scenes:
        if scene.scene_id in seen:
            raise DuplicateIdError(f"duplicate scene id {scene.scene_id!r}")
        seen.add(scene.scene_id)

    images = []
    annotations = []
    ann_id = 1
    for si, scene in enumerate(scenes):
        image_id = si + 1
        h, w = scene.image.shape[:2]
        images.append({
            "id": image_id,
            "file_name": f"{scene.scene_id}.png",
            "width": w,
            "height": h,
        })
        for inst in scene.instances:
            annotations.append({
                "id": ann_id,
                "image_id": image_id,
                "category_id": inst.category,
                "segmentation": rle.mask_to_coco(inst.visible_mask),
                "bbox": inst.bbox.as_list(),
                "area": int(inst.visible_mask.sum()),
                "iscrowd": 0,
            })
            ann_id += 1
    categories = [{"id": cid, "name": name} for cid, name in sorted(CATEGORY_NAMES.items())]
    return {"images": images, "categories": categories, "annotations": annotations}


def emit_dataset(scenes: list[SceneAnnotation], out_dir: str | Path) -> bytes:
    """Write scene PNGs plus annotations.json; returns the JSON bytes.

    Key order and formatting are fixed, so equal scene lists produce
    identical bytes.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    doc = dataset_document(scenes)
    for scene in scenes:
        save_rgb(out_dir / f"{scene.scene_id}.png", scene.image)
    data = (json.dumps(doc, indent=2) + "\n").encode("utf-8")
    (out_dir / ANNOTATION_FILE).write_bytes(data)
    return data
