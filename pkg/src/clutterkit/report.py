"""Dataset-preparation cost model, trial success rates, and throughput.

The cost model's default constants are measured one-off times for
generator training and sampling per category; the self-annotation
reference of 19.64 ms per instance is the published figure our own
benchmark reports a ratio against.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping

import numpy as np

from .core import load_rgb
from .errors import ZeroAttemptsError
from .objprep import DEFAULT_MIN_COMPONENT_AREA, DEFAULT_WHITE_THRESHOLD, annotate_image

DEFAULT_GAN_TRAIN_S = {
    "apple": 1404.35,
    "banana": 1395.20,
    "strawberry": 1411.18,
    "orange": 1397.56,
    "peach": 1389.97,
    "plum": 1433.73,
}
DEFAULT_GAN_SAMPLE_S = {
    "apple": 68.30,
    "banana": 70.68,
    "strawberry": 58.91,
    "orange": 67.29,
    "peach": 68.52,
    "plum": 67.92,
}
REFERENCE_SELF_ANNOTATION_MS = 19.64


def round_half_up(value: float, ndigits: int = 1) -> float:
    """Decimal rounding with .5 going away from zero (for percentages)."""
    factor = 10 ** ndigits
    return math.floor(abs(value) * factor + 0.5) / factor * (1 if value >= 0 else -1)


@dataclass(frozen=True)
class CostModelParams:
    gan_train_s: Mapping[str, float]
    gan_sample_s: Mapping[str, float]
    self_annot_ms: float
    compose_ms: float
    instances_per_scene: int

    def __post_init__(self):
        values = list(self.gan_train_s.values()) + list(self.gan_sample_s.values())
        values += [self.self_annot_ms, self.compose_ms, self.instances_per_scene]
        if any(v < 0 for v in values):
            raise ValueError("cost parameters must be non-negative")

    @classmethod
    def default(cls) -> "CostModelParams":
        return cls(gan_train_s=dict(DEFAULT_GAN_TRAIN_S),
                   gan_sample_s=dict(DEFAULT_GAN_SAMPLE_S),
                   self_annot_ms=REFERENCE_SELF_ANNOTATION_MS,
                   compose_ms=50.0,
                   instances_per_scene=10)

    @classmethod
    def from_json(cls, path: str | Path) -> "CostModelParams":
        with open(path) as f:
            data = json.load(f)
        base = cls.default()
        return cls(
            gan_train_s=data.get("gan_train_s", dict(base.gan_train_s)),
            gan_sample_s=data.get("gan_sample_s", dict(base.gan_sample_s)),
            self_annot_ms=float(data.get("self_annot_ms", base.self_annot_ms)),
            compose_ms=float(data.get("compose_ms", base.compose_ms)),
            instances_per_scene=int(data.get("instances_per_scene", base.instances_per_scene)),
        )


def estimate_prep_time(n_scenes: int, params: CostModelParams,
                       categories: set[str]) -> float:
    """Total preparation seconds for n scenes.

    One-off generator training and sampling per category, plus the
    per-scene self-annotation and composition costs. Affine in
    n_scenes, with a nonzero intercept at n = 0.
    """
    if n_scenes < 0:
        raise ValueError("scene count must be non-negative")
    fixed = sum(params.gan_train_s[c] + params.gan_sample_s[c] for c in sorted(categories))
    per_scene = (params.instances_per_scene * params.self_annot_ms + params.compose_ms) / 1000.0
    return fixed + n_scenes * per_scene


def prep_time_rows(params: CostModelParams, categories: set[str],
                   scene_counts: list[int]) -> list[dict]:
    """CSV-ready (n_scenes, seconds) rows for plotting."""
    return [
        {"n_scenes": n, "seconds": estimate_prep_time(n, params, categories)}
        for n in scene_counts
    ]


@dataclass(frozen=True)
class TrialTally:
    """Per-category (successes, attempts) for labelling and grasping."""

    labelling: Mapping[str, tuple[int, int]]
    grasping: Mapping[str, tuple[int, int]]

    def __post_init__(self):
        for column in (self.labelling, self.grasping):
            for cat, (s, a) in column.items():
                if not 0 <= s <= a:
                    raise ValueError(f"bad tally for {cat}: {s}/{a}")

    @classmethod
    def from_json(cls, path: str | Path) -> "TrialTally":
        with open(path) as f:
            data = json.load(f)
        return cls(
            labelling={k: (int(s), int(a)) for k, (s, a) in data["labelling"].items()},
            grasping={k: (int(s), int(a)) for k, (s, a) in data["grasping"].items()},
        )


def _column_rates(column: Mapping[str, tuple[int, int]]) -> dict:
    total_s = sum(s for s, _ in column.values())
    total_a = sum(a for _, a in column.values())
    if total_a == 0:
        raise ZeroAttemptsError("no attempts recorded")
    per_category = {
        cat: round_half_up(s / a * 100.0) if a else 0.0
        for cat, (s, a) in column.items()
    }
    return {
        "per_category": per_category,
        "total": round_half_up(total_s / total_a * 100.0),
        "successes": total_s,
        "attempts": total_a,
    }


def success_rates(tally: TrialTally) -> dict:
    """Per-category and pooled success percentages, half-up, 1 decimal."""
    return {
        "labelling": _column_rates(tally.labelling),
        "grasping": _column_rates(tally.grasping),
    }


def bench_self_annotation(in_dir: str | Path,
                          thresh: int = DEFAULT_WHITE_THRESHOLD,
                          min_area: int = DEFAULT_MIN_COMPONENT_AREA,
                          category: int = 1) -> dict:
    """Time the per-image self-annotation pipeline over a directory.

    Loads all images up front, then times mask extraction + cleanup +
    cutout per image on the monotonic clock, one image at a time.
    Needs at least 100 images for a meaningful distribution.
    """
    paths = sorted(Path(in_dir).glob("*.png"))
    if len(paths) < 100:
        raise ValueError(f"need >= 100 images, found {len(paths)}")
    images = [load_rgb(p) for p in paths]

    latencies_ms = []
    for image in images:
        t0 = time.perf_counter()
        annotate_image(image, category, thresh, min_area)
        latencies_ms.append((time.perf_counter() - t0) * 1000.0)

    arr = np.array(latencies_ms)
    mean_ms = float(arr.mean())
    return {
        "count": len(latencies_ms),
        "mean_ms": mean_ms,
        "p50_ms": float(np.percentile(arr, 50)),
        "p90_ms": float(np.percentile(arr, 90)),
        "p99_ms": float(np.percentile(arr, 99)),
        "max_ms": float(arr.max()),
        "reference_ms": REFERENCE_SELF_ANNOTATION_MS,
        "ratio_to_reference": mean_ms / REFERENCE_SELF_ANNOTATION_MS,
    }
