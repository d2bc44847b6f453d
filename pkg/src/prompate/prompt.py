"""Visual prompt input transform and label-mapping output transform.

Input side: the target image is bilinearly resized, zero-padded into the
centre of a source-shaped canvas, and the border is replaced by a trainable
perturbation ``omega1``::

    x_hat = M * omega1 + (1 - M) * zeropad(x_target)

With ``masked=False`` the mask covers the whole canvas, which would erase the
input, so that ablation uses the additive form ``omega1 + zeropad(x)``.

Output side: a label map turns the frozen model's source logits into target
logits, followed by a softmax.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ChannelMismatch,
    MapIndexOutOfRange,
    MissingForwardCache,
    RescaleExceedsSource,
    ShapeMismatch,
)

MAP_KINDS = ("random", "fc1", "fc2")
OMEGA_INIT = 0.03


@dataclass(frozen=True)
class PromptSpec:
    source_dims: tuple[int, int, int] = (1, 32, 32)
    rescale: tuple[int, int] = (24, 24)
    masked: bool = True

    def __post_init__(self):
        object.__setattr__(self, "source_dims", tuple(int(d) for d in self.source_dims))
        object.__setattr__(self, "rescale", tuple(int(r) for r in self.rescale))
        _, h, w = self.source_dims
        rh, rw = self.rescale
        if rh < 1 or rw < 1:
            raise RescaleExceedsSource(f"rescale must be positive, got {self.rescale}")
        if rh > h or rw > w:
            raise RescaleExceedsSource(
                f"rescale {self.rescale} exceeds source size {(h, w)}")

    @property
    def window(self) -> tuple[slice, slice]:
        _, h, w = self.source_dims
        rh, rw = self.rescale
        top, left = (h - rh) // 2, (w - rw) // 2
        return slice(top, top + rh), slice(left, left + rw)


def build_mask(spec: PromptSpec) -> np.ndarray:
    """Binary mask: 1 on the prompt border, 0 on the embedded window."""
    mask = np.ones(spec.source_dims, dtype=np.float64)
    if spec.masked:
        rows, cols = spec.window
        mask[:, rows, cols] = 0.0
    return mask


def resize_matrix(n_in: int, n_out: int) -> np.ndarray:
    """Bilinear (half-pixel, edge-clamped) interpolation weights, (n_out, n_in).

    Output sample ``i`` reads source coordinate ``(i + 0.5) * n_in / n_out - 0.5``.
    Rows sum to one, so constants are preserved.
    """
    mat = np.zeros((n_out, n_in), dtype=np.float64)
    scale = n_in / n_out
    for i in range(n_out):
        src = min(max((i + 0.5) * scale - 0.5, 0.0), n_in - 1.0)
        lo = int(math.floor(src))
        hi = min(lo + 1, n_in - 1)
        frac = src - lo
        mat[i, lo] += 1.0 - frac
        mat[i, hi] += frac
    return mat


def resize(images: np.ndarray, size: tuple[int, int]) -> np.ndarray:
    """Bilinear resize of (..., H, W) images."""
    h, w = images.shape[-2:]
    if (h, w) == tuple(size):
        return np.array(images, dtype=np.float64, copy=True)
    rh = resize_matrix(h, size[0])
    rw = resize_matrix(w, size[1])
    # Two matmuls: a three-operand einsum would loop without BLAS.
    return rh @ np.asarray(images, dtype=np.float64) @ rw.T


def embed_target(x: np.ndarray, spec: PromptSpec) -> np.ndarray:
    """Resize target images to the window and zero-pad to source shape.

    Accepts a single image (C, H, W) or a batch (N, C, H, W).
    """
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 3
    if single:
        x = x[None]
    if x.ndim != 4:
        raise ShapeMismatch(f"expected (N, C, H, W) images, got shape {x.shape}")
    if x.shape[1] != spec.source_dims[0]:
        raise ChannelMismatch(
            f"target has {x.shape[1]} channels, source expects {spec.source_dims[0]}")
    out = np.zeros((x.shape[0],) + spec.source_dims, dtype=np.float64)
    rows, cols = spec.window
    out[:, :, rows, cols] = resize(x, spec.rescale)
    return out[0] if single else out


def apply_prompt_embedded(embedded: np.ndarray, omega1: np.ndarray,
                          spec: PromptSpec) -> np.ndarray:
    """Prompt already-embedded inputs (see :func:`apply_prompt`)."""
    if omega1.shape != spec.source_dims or embedded.shape[-3:] != spec.source_dims:
        raise ShapeMismatch(
            f"omega1 {omega1.shape} / input {embedded.shape[-3:]} vs source {spec.source_dims}")
    if not spec.masked:
        return embedded + omega1
    # np.where, not arithmetic: keeps both partitions bit-exact (e.g. -0.0).
    return np.where(build_mask(spec) == 1.0, omega1, embedded)


def apply_prompt(x: np.ndarray, omega1: np.ndarray, spec: PromptSpec) -> np.ndarray:
    return apply_prompt_embedded(embed_target(x, spec), np.asarray(omega1), spec)


def prompt_input_backward(grad_xhat: np.ndarray, spec: PromptSpec) -> np.ndarray:
    """Gradient w.r.t. omega1 given dL/dx_hat for a batch."""
    g = np.asarray(grad_xhat).reshape((-1,) + spec.source_dims).sum(axis=0)
    if spec.masked:
        g = g * build_mask(spec)
    return g


def init_omega(spec: PromptSpec, rng: np.random.Generator) -> np.ndarray:
    return rng.uniform(-OMEGA_INIT, OMEGA_INIT, size=spec.source_dims)


# ---------------------------------------------------------------- label maps

def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


class LabelMap:
    """Base for source-logit to target-logit maps."""

    kind = ""

    def params(self) -> dict[str, np.ndarray]:
        return {}

    def set_params(self, params: dict[str, np.ndarray]) -> None:
        for name, value in params.items():
            setattr(self, name, value)

    def forward(self, y_src: np.ndarray):
        raise NotImplementedError

    def backward(self, cache, grad_out: np.ndarray):
        raise NotImplementedError


@dataclass
class RandomMap(LabelMap):
    """Fixed injective assignment: target class k reads source logit ``index[k]``."""

    index: np.ndarray
    num_source: int
    kind = "random"

    def __post_init__(self):
        self.index = np.asarray(self.index, dtype=np.int64)
        if self.index.min() < 0 or self.index.max() >= self.num_source:
            raise MapIndexOutOfRange(
                f"map indices must lie in [0, {self.num_source})")
        if np.unique(self.index).size != self.index.size:
            raise MapIndexOutOfRange("random label map must be injective")

    def params(self):
        return {}

    def forward(self, y_src):
        return y_src[..., self.index], None

    def backward(self, cache, grad_out):
        grad_in = np.zeros(grad_out.shape[:-1] + (self.num_source,))
        grad_in[..., self.index] = grad_out
        return grad_in, {}


@dataclass
class Fc1Map(LabelMap):
    weight: np.ndarray  # (K_T, K_S)
    bias: np.ndarray    # (K_T,)
    kind = "fc1"

    def __post_init__(self):
        if self.weight.ndim != 2 or self.bias.shape != (self.weight.shape[0],):
            raise ShapeMismatch("fc1 weight/bias shapes disagree")

    def params(self):
        return {"weight": self.weight, "bias": self.bias}

    def forward(self, y_src):
        return y_src @ self.weight.T + self.bias, y_src

    def backward(self, cache, grad_out):
        if cache is None:
            raise MissingForwardCache("fc1 backward called without forward cache")
        return grad_out @ self.weight, {
            "weight": grad_out.T @ cache, "bias": grad_out.sum(axis=0)}


@dataclass
class Fc2Map(LabelMap):
    """Two affine layers with a rectifier in between."""

    weight1: np.ndarray  # (H, K_S)
    bias1: np.ndarray
    weight2: np.ndarray  # (K_T, H)
    bias2: np.ndarray
    kind = "fc2"

    def __post_init__(self):
        if (self.weight1.shape[0] != self.weight2.shape[1]
                or self.bias1.shape != (self.weight1.shape[0],)
                or self.bias2.shape != (self.weight2.shape[0],)):
            raise ShapeMismatch("fc2 layer shapes disagree")

    def params(self):
        return {"weight1": self.weight1, "bias1": self.bias1,
                "weight2": self.weight2, "bias2": self.bias2}

    def forward(self, y_src):
        pre = y_src @ self.weight1.T + self.bias1
        hidden = np.maximum(pre, 0.0)
        return hidden @ self.weight2.T + self.bias2, (y_src, pre > 0, hidden)

    def backward(self, cache, grad_out):
        if cache is None:
            raise MissingForwardCache("fc2 backward called without forward cache")
        y_src, active, hidden = cache
        g_pre = (grad_out @ self.weight2) * active
        return g_pre @ self.weight1, {
            "weight1": g_pre.T @ y_src, "bias1": g_pre.sum(axis=0),
            "weight2": grad_out.T @ hidden, "bias2": grad_out.sum(axis=0)}


def _uniform_fan_in(rng, shape):
    bound = 1.0 / math.sqrt(shape[1])
    return rng.uniform(-bound, bound, size=shape)


def make_label_map(kind: str, num_source: int, num_target: int,
                   rng: np.random.Generator) -> LabelMap:
    kind = kind.lower()
    if num_target > num_source and kind == "random":
        raise MapIndexOutOfRange(
            f"random map needs K_T <= K_S, got {num_target} > {num_source}")
    if kind == "random":
        return RandomMap(rng.permutation(num_source)[:num_target], num_source)
    # Output layers start at zero: the map begins as the uniform predictor
    # instead of amplifying large source logits into a confident wrong guess.
    if kind == "fc1":
        return Fc1Map(np.zeros((num_target, num_source)), np.zeros(num_target))
    if kind == "fc2":
        hidden = (num_source + 1) // 2
        return Fc2Map(_uniform_fan_in(rng, (hidden, num_source)), np.zeros(hidden),
                      np.zeros((num_target, hidden)), np.zeros(num_target))
    raise ValueError(f"unknown label map kind {kind!r}; expected one of {MAP_KINDS}")


def map_labels(y_src: np.ndarray, label_map: LabelMap) -> np.ndarray:
    """Target class probabilities from source logits."""
    y_src = np.asarray(y_src, dtype=np.float64)
    if not np.all(np.isfinite(y_src)):
        raise ValueError("source logits must be finite")
    logits, _ = label_map.forward(y_src)
    return softmax(logits)


@dataclass
class PromptParams:
    """All trainable state of a visual-prompt model."""

    omega1: np.ndarray
    label_map: LabelMap

    def trainable(self) -> dict[str, np.ndarray]:
        out = {"omega1": self.omega1}
        out.update({f"map.{k}": v for k, v in self.label_map.params().items()})
        return out

    def assign(self, values: dict[str, np.ndarray]) -> None:
        if "omega1" in values:
            self.omega1 = values["omega1"]
        self.label_map.set_params(
            {k[4:]: v for k, v in values.items() if k.startswith("map.")})
