"""Frozen source model and the trainable wrappers built on it."""

from __future__ import annotations

import hashlib
import json

import numpy as np

from ..errors import FrozenModelMutated, MissingForwardCache, ShapeMismatch
from ..prompt import (
    PromptParams,
    PromptSpec,
    apply_prompt_embedded,
    embed_target,
    init_omega,
    make_label_map,
    prompt_input_backward,
    softmax,
)
from .layers import Sequential, conv_stack, cross_entropy

PREDICT_BATCH = 512


def fingerprint_params(net: Sequential, params: dict[str, np.ndarray]) -> str:
    h = hashlib.sha256(json.dumps(net.describe(), sort_keys=True).encode())
    for name in sorted(params):
        arr = np.ascontiguousarray(params[name], dtype=np.float64)
        h.update(name.encode())
        h.update(str(arr.shape).encode())
        h.update(arr.tobytes())
    return h.hexdigest()


class FrozenSourceModel:
    """Immutable classifier shared by every teacher and the student.

    Parameter arrays are read-only after construction; :attr:`fingerprint`
    is a content hash used to prove nothing changed them.
    """

    def __init__(self, net: Sequential, params: dict[str, np.ndarray],
                 source_accuracy: float | None = None, seed: int | None = None):
        self.net = net
        sealed = {}
        for name, value in params.items():
            arr = np.array(value, dtype=np.float64, copy=True)
            arr.setflags(write=False)
            sealed[name] = arr
        self.params = sealed
        self.source_accuracy = source_accuracy
        self.seed = seed
        self._fingerprint = fingerprint_params(net, sealed)

    @property
    def fingerprint(self) -> str:
        return self._fingerprint

    def current_fingerprint(self) -> str:
        return fingerprint_params(self.net, self.params)

    def verify(self) -> None:
        if self.current_fingerprint() != self._fingerprint:
            raise FrozenModelMutated("frozen source parameters changed")

    @property
    def input_shape(self):
        return self.net.input_shape

    @property
    def num_classes(self) -> int:
        return self.net.output_dim

    def forward(self, x, stop=None):
        return self.net.forward(self.params, x, stop=stop)

    def input_grad(self, caches, grad):
        dx, _ = self.net.backward(self.params, caches, grad, need_param_grads=False)
        return dx

    def logits(self, x):
        return self.forward(x)[0]

    def predict(self, x):
        return _batched(lambda b: np.argmax(self.logits(b), axis=1), x)


def _batched(fn, x, batch=PREDICT_BATCH):
    if x.shape[0] <= batch:
        return fn(x)
    return np.concatenate([fn(x[i:i + batch]) for i in range(0, x.shape[0], batch)])


class TargetModel:
    """Common interface: trainable params, loss/grad on prepared inputs, predict.

    ``prepare`` maps raw target images to the model's input space once, so
    training loops do not redo the resize every batch.
    """

    kind = ""
    spec: PromptSpec

    def prepare(self, x):
        return embed_target(x, self.spec)

    def trainable(self) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def assign(self, values: dict[str, np.ndarray]) -> None:
        raise NotImplementedError

    def forward(self, prepared):
        raise NotImplementedError

    def backward(self, cache, grad_logits) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def loss_and_grads(self, prepared, labels):
        logits, cache = self.forward(prepared)
        loss, g = cross_entropy(logits, labels)
        return loss, self.backward(cache, g)

    def logits_prepared(self, prepared):
        return _batched(lambda b: self.forward(b)[0], prepared)

    def predict_proba(self, x):
        return softmax(self.logits_prepared(self.prepare(x)))

    def predict(self, x):
        return np.argmax(self.logits_prepared(self.prepare(x)), axis=1)


class ReTeacher(TargetModel):
    """Visual prompt + label map around the frozen source (only omega trains)."""

    kind = "vp"

    def __init__(self, source: FrozenSourceModel, spec: PromptSpec, prompt: PromptParams):
        if tuple(spec.source_dims) != tuple(source.input_shape):
            raise ShapeMismatch(
                f"prompt source dims {spec.source_dims} != model input {source.input_shape}")
        self.source = source
        self.spec = spec
        self.prompt = prompt

    @classmethod
    def initialise(cls, source, spec, map_kind, num_classes, rng):
        omega1 = init_omega(spec, rng)
        label_map = make_label_map(map_kind, source.num_classes, num_classes, rng)
        return cls(source, spec, PromptParams(omega1, label_map))

    @property
    def map_kind(self):
        return self.prompt.label_map.kind

    def trainable(self):
        return self.prompt.trainable()

    def assign(self, values):
        self.prompt.assign(values)

    def forward(self, prepared):
        x_hat = apply_prompt_embedded(prepared, self.prompt.omega1, self.spec)
        y_src, src_caches = self.source.forward(x_hat)
        logits, map_cache = self.prompt.label_map.forward(y_src)
        return logits, (src_caches, map_cache)

    def backward(self, cache, grad_logits):
        return prompt_backward(grad_logits, cache, self)


def prompt_backward(grad_logits, cache, teacher: ReTeacher) -> dict[str, np.ndarray]:
    """Gradients of the prompt parameters given dL/d(target logits).

    The frozen source only propagates; its parameters get no gradient.
    """
    if cache is None:
        raise MissingForwardCache("backward called before forward")
    src_caches, map_cache = cache
    label_map = teacher.prompt.label_map
    grad_src, map_grads = label_map.backward(map_cache, grad_logits)
    grad_xhat = teacher.source.input_grad(src_caches, grad_src)
    grads = {"omega1": prompt_input_backward(grad_xhat, teacher.spec)}
    grads.update({f"map.{k}": v for k, v in map_grads.items()})
    return grads


class ScratchModel(TargetModel):
    """Randomly initialised network of the source architecture, fully trained."""

    kind = "scratch"

    def __init__(self, net: Sequential, params, spec: PromptSpec):
        self.net = net
        self.params = dict(params)
        self.spec = spec

    @classmethod
    def initialise(cls, source, spec, map_kind, num_classes, rng):
        conv_channels = tuple(layer.out_channels for layer in source.net.layers
                              if hasattr(layer, "out_channels"))
        net = conv_stack(source.input_shape, num_classes, conv_channels)
        return cls(net, net.init_params(rng), spec)

    def trainable(self):
        return dict(self.params)

    def assign(self, values):
        self.params.update(values)

    def forward(self, prepared):
        return self.net.forward(self.params, prepared)

    def backward(self, cache, grad_logits):
        _, grads = self.net.backward(self.params, cache, grad_logits)
        return grads


class TransferModel(TargetModel):
    """Frozen feature body, fine-tuned copy of the source head, then a label map."""

    kind = "transfer"

    def __init__(self, source: FrozenSourceModel, spec, head: dict, label_map):
        self.source = source
        self.spec = spec
        self.head_index = len(source.net.layers) - 1
        self.head = dict(head)
        self.label_map = label_map

    @classmethod
    def initialise(cls, source, spec, map_kind, num_classes, rng):
        idx = len(source.net.layers) - 1
        head = {"weight": np.array(source.params[f"{idx}.weight"]),
                "bias": np.array(source.params[f"{idx}.bias"])}
        return cls(source, spec, head,
                   make_label_map(map_kind, source.num_classes, num_classes, rng))

    def trainable(self):
        out = {f"head.{k}": v for k, v in self.head.items()}
        out.update({f"map.{k}": v for k, v in self.label_map.params().items()})
        return out

    def assign(self, values):
        for k, v in values.items():
            if k.startswith("head."):
                self.head[k[5:]] = v
        self.label_map.set_params({k[4:]: v for k, v in values.items() if k.startswith("map.")})

    def forward(self, prepared):
        feats, _ = self.source.forward(prepared, stop=self.head_index)
        head_layer = self.source.net.layers[self.head_index]
        y_src, head_cache = head_layer.forward(self.head, feats)
        logits, map_cache = self.label_map.forward(y_src)
        return logits, (head_cache, map_cache)

    def backward(self, cache, grad_logits):
        head_cache, map_cache = cache
        head_layer = self.source.net.layers[self.head_index]
        grad_src, map_grads = self.label_map.backward(map_cache, grad_logits)
        _, head_grads = head_layer.backward(self.head, head_cache, grad_src)
        grads = {f"head.{k}": v for k, v in head_grads.items()}
        grads.update({f"map.{k}": v for k, v in map_grads.items()})
        return grads


MODEL_KINDS = {"vp": ReTeacher, "scratch": ScratchModel, "transfer": TransferModel}


def build_model(kind, source, spec, map_kind, num_classes, rng) -> TargetModel:
    try:
        cls = MODEL_KINDS[kind]
    except KeyError:
        raise ValueError(f"unknown model kind {kind!r}; expected one of {sorted(MODEL_KINDS)}")
    return cls.initialise(source, spec, map_kind, num_classes, rng)
