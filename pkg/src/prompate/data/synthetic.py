"""Procedural image families with a controllable domain gap.

Every class of every family has a fixed prototype (blob position, grating
orientation, checker geometry) that depends only on the class index, so
class ``c`` means the same thing in every dataset built from a family.
A target set at ``gap_knob = g`` blends each image as

    (1 - g) * base_family(c) + g * family(c)

so ``g = 0`` reproduces the base (source) family and ``g = 1`` removes it.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from ..errors import InvalidSpec

FAMILIES = ("blobs", "stripes", "checker", "mixed")
_BASIC = ("blobs", "stripes", "checker")
_GOLDEN_ANGLE = math.pi * (3.0 - math.sqrt(5.0))
_PHI_FRAC = (math.sqrt(5.0) - 1.0) / 2.0
_BLOB_SLOTS = 32


@dataclass(frozen=True)
class SyntheticSpec:
    classes: int = 10
    dims: tuple[int, int, int] = (1, 32, 32)
    family: str = "stripes"
    gap_knob: float = 0.0
    noise_level: float = 0.1
    count: int = 1000
    seed: int = 0
    base_family: str | None = None  # defaults to ``family`` (no gap possible)

    def __post_init__(self):
        if self.base_family is None:
            object.__setattr__(self, "base_family", self.family)
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        object.__setattr__(self, "family", str(self.family).lower())
        object.__setattr__(self, "base_family", str(self.base_family).lower())
        if self.classes < 2:
            raise InvalidSpec("classes must be >= 2")
        if self.count < self.classes:
            raise InvalidSpec(f"count ({self.count}) must be >= classes ({self.classes})")
        if len(self.dims) != 3 or min(self.dims) < 1:
            raise InvalidSpec(f"dims must be three positive integers, got {self.dims}")
        if self.family not in FAMILIES or self.base_family not in FAMILIES:
            raise InvalidSpec(f"family must be one of {FAMILIES}")
        if not (0.0 <= self.gap_knob <= 1.0):
            raise InvalidSpec("gap_knob must lie in [0, 1]")
        if self.noise_level < 0:
            raise InvalidSpec("noise_level must be nonnegative")

    def digest(self) -> str:
        blob = json.dumps(asdict(self), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]


def _grid(h, w):
    v = (np.arange(h) + 0.5) / h * 2.0 - 1.0
    u = (np.arange(w) + 0.5) / w * 2.0 - 1.0
    return np.meshgrid(u, v)  # each (h, w)


def _blobs(classes, rng, h, w):
    u, v = _grid(h, w)
    slots = max(_BLOB_SLOTS, int(classes.max()) + 1)
    radius = 0.8 * np.sqrt((classes + 0.5) / slots)
    angle = classes * _GOLDEN_ANGLE
    cx = radius * np.cos(angle) + rng.normal(0, 0.04, classes.size)
    cy = radius * np.sin(angle) + rng.normal(0, 0.04, classes.size)
    width = 0.16 * rng.uniform(0.85, 1.15, classes.size)
    d2 = (u[None] - cx[:, None, None]) ** 2 + (v[None] - cy[:, None, None]) ** 2
    return np.exp(-d2 / (2.0 * width[:, None, None] ** 2))


def _stripes(classes, rng, h, w):
    u, v = _grid(h, w)
    theta = (classes * _PHI_FRAC % 1.0) * math.pi + rng.normal(0, 0.03, classes.size)
    freq = 1.25 + 0.5 * (classes % 3)
    phase = rng.uniform(0, 2 * math.pi, classes.size)
    proj = (u[None] * np.cos(theta)[:, None, None] + v[None] * np.sin(theta)[:, None, None])
    return 0.5 + 0.5 * np.cos(2 * math.pi * freq[:, None, None] * proj + phase[:, None, None])


def _checker(classes, rng, h, w):
    u, v = _grid(h, w)
    cells = 1.5 + (classes % 4)
    rot = (classes * (1 - _PHI_FRAC) % 1.0) * (math.pi / 2)
    ox = rng.uniform(-1, 1, classes.size)
    oy = rng.uniform(-1, 1, classes.size)
    c, s = np.cos(rot)[:, None, None], np.sin(rot)[:, None, None]
    ur = c * u[None] - s * v[None] + ox[:, None, None]
    vr = s * u[None] + c * v[None] + oy[:, None, None]
    k = math.pi * cells[:, None, None]
    return 0.5 + 0.5 * np.tanh(4.0 * np.sin(k * ur) * np.sin(k * vr))


_PATTERNS = {"blobs": _blobs, "stripes": _stripes, "checker": _checker}


def family_pattern(family: str, classes, rng, h: int, w: int,
                   alternate: bool = False) -> np.ndarray:
    """Single-channel images (N, h, w) in [0, 1] for the given class indices.

    ``alternate`` gives the same family with shifted class prototypes and
    inverted polarity, used when a target shares its base family.
    """
    classes = np.asarray(classes, dtype=np.int64)
    if family == "mixed":
        # class c is drawn from basic family c % 3, keeping prototype index c
        out = np.empty((classes.size, h, w))
        for i, fam in enumerate(_BASIC):
            sel = classes % 3 == i
            if sel.any():
                out[sel] = family_pattern(fam, classes[sel], rng, h, w, alternate)
        return out
    if alternate:
        return 1.0 - _PATTERNS[family](classes + 7, rng, h, w)
    return _PATTERNS[family](classes, rng, h, w)


def generate_arrays(spec: SyntheticSpec) -> tuple[np.ndarray, np.ndarray]:
    """Images (N, C, H, W) in [0, 1] and balanced labels, deterministic in the seed."""
    rng = np.random.default_rng(spec.seed)
    c, h, w = spec.dims
    labels = rng.permutation(np.arange(spec.count) % spec.classes)
    g = spec.gap_knob
    img = np.zeros((spec.count, h, w))
    if g < 1.0:
        img += (1.0 - g) * family_pattern(spec.base_family, labels, rng, h, w)
    if g > 0.0:
        img += g * family_pattern(spec.family, labels, rng, h, w,
                                  alternate=spec.family == spec.base_family)
    gains = 1.0 - 0.2 * np.arange(c)
    images = img[:, None] * gains[None, :, None, None]
    if spec.noise_level > 0:
        images = images + rng.normal(0.0, spec.noise_level, images.shape)
    return np.clip(images, 0.0, 1.0), labels.astype(np.int64)


def class_mean_distance(images_a, labels_a, images_b, labels_b, classes: int) -> float:
    """Mean Euclidean distance between matching class-mean images of two sets."""
    dists = []
    for k in range(classes):
        ma = images_a[labels_a == k].mean(axis=0)
        mb = images_b[labels_b == k].mean(axis=0)
        dists.append(float(np.linalg.norm(ma - mb)))
    return float(np.mean(dists))
