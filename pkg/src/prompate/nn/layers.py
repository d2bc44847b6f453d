"""Dense float64 layers with hand-written backward passes.

Layers hold no per-call state: ``forward`` returns ``(output, cache)`` and
``backward`` consumes that cache, so one parameter set can be shared by
many concurrent callers.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view


class Layer:
    name = ""

    def init_params(self, rng: np.random.Generator) -> dict[str, np.ndarray]:
        return {}

    def forward(self, params, x):
        raise NotImplementedError

    def backward(self, params, cache, grad, need_param_grads=True):
        raise NotImplementedError

    def output_shape(self, in_shape):
        return in_shape

    def describe(self) -> dict:
        return {"type": type(self).__name__}


class Conv2d(Layer):
    """2-D convolution over (N, C, H, W) via im2col."""

    def __init__(self, in_channels, out_channels, kernel=3, stride=2, padding=1):
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel = kernel
        self.stride = stride
        self.padding = padding

    def describe(self):
        return {"type": "Conv2d", "in_channels": self.in_channels,
                "out_channels": self.out_channels, "kernel": self.kernel,
                "stride": self.stride, "padding": self.padding}

    def init_params(self, rng):
        fan_in = self.in_channels * self.kernel ** 2
        bound = math.sqrt(6.0 / fan_in)  # He-uniform for rectifier stacks
        shape = (self.out_channels, self.in_channels, self.kernel, self.kernel)
        return {"weight": rng.uniform(-bound, bound, size=shape),
                "bias": np.zeros(self.out_channels)}

    def output_shape(self, in_shape):
        c, h, w = in_shape
        k, s, p = self.kernel, self.stride, self.padding
        return (self.out_channels, (h + 2 * p - k) // s + 1, (w + 2 * p - k) // s + 1)

    def _cols(self, x):
        p, k, s = self.padding, self.kernel, self.stride
        xp = np.pad(x, ((0, 0), (0, 0), (p, p), (p, p))) if p else x
        win = sliding_window_view(xp, (k, k), axis=(2, 3))[:, :, ::s, ::s]
        n, c, ho, wo = win.shape[:4]
        cols = win.transpose(0, 2, 3, 1, 4, 5).reshape(n * ho * wo, c * k * k)
        return cols, (n, c, ho, wo, xp.shape)

    def forward(self, params, x):
        cols, geom = self._cols(x)
        n, _, ho, wo, _ = geom
        w = params["weight"].reshape(self.out_channels, -1)
        y = cols @ w.T + params["bias"]
        y = y.reshape(n, ho, wo, self.out_channels).transpose(0, 3, 1, 2)
        return y, (cols, geom)

    def backward(self, params, cache, grad, need_param_grads=True):
        cols, (n, c, ho, wo, padded_shape) = cache
        k, s, p = self.kernel, self.stride, self.padding
        g = grad.transpose(0, 2, 3, 1).reshape(-1, self.out_channels)
        grads = {}
        if need_param_grads:
            grads["weight"] = (g.T @ cols).reshape(params["weight"].shape)
            grads["bias"] = g.sum(axis=0)
        dcols = (g @ params["weight"].reshape(self.out_channels, -1))
        dcols = dcols.reshape(n, ho, wo, c, k, k)
        dxp = np.zeros(padded_shape)
        for i in range(k):
            for j in range(k):
                dxp[:, :, i:i + s * ho:s, j:j + s * wo:s] += \
                    dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        dx = dxp[:, :, p:padded_shape[2] - p, p:padded_shape[3] - p] if p else dxp
        return dx, grads


class Linear(Layer):
    def __init__(self, in_features, out_features):
        self.in_features = in_features
        self.out_features = out_features

    def describe(self):
        return {"type": "Linear", "in_features": self.in_features,
                "out_features": self.out_features}

    def init_params(self, rng):
        bound = 1.0 / math.sqrt(self.in_features)
        return {"weight": rng.uniform(-bound, bound, size=(self.out_features, self.in_features)),
                "bias": np.zeros(self.out_features)}

    def output_shape(self, in_shape):
        return (self.out_features,)

    def forward(self, params, x):
        return x @ params["weight"].T + params["bias"], x

    def backward(self, params, cache, grad, need_param_grads=True):
        grads = {}
        if need_param_grads:
            grads = {"weight": grad.T @ cache, "bias": grad.sum(axis=0)}
        return grad @ params["weight"], grads


class ReLU(Layer):
    def forward(self, params, x):
        mask = x > 0
        return x * mask, mask

    def backward(self, params, cache, grad, need_param_grads=True):
        return grad * cache, {}


class Flatten(Layer):
    def output_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def forward(self, params, x):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, params, cache, grad, need_param_grads=True):
        return grad.reshape(cache), {}


LAYER_TYPES = {cls.__name__: cls for cls in (Conv2d, Linear, ReLU, Flatten)}


def layer_from_dict(d: dict) -> Layer:
    d = dict(d)
    cls = LAYER_TYPES[d.pop("type")]
    return cls(**d)


class Sequential:
    """Ordered layer stack; parameters live in a flat ``"<i>.<name>"`` dict."""

    def __init__(self, layers, input_shape):
        self.layers = list(layers)
        self.input_shape = tuple(input_shape)

    def init_params(self, rng):
        params = {}
        for i, layer in enumerate(self.layers):
            for name, value in layer.init_params(rng).items():
                params[f"{i}.{name}"] = value
        return params

    @property
    def output_dim(self):
        shape = self.input_shape
        for layer in self.layers:
            shape = layer.output_shape(shape)
        return shape[0]

    def _slice(self, params, i):
        prefix = f"{i}."
        return {k[len(prefix):]: v for k, v in params.items() if k.startswith(prefix)}

    def forward(self, params, x, start=0, stop=None):
        caches = []
        for i, layer in enumerate(self.layers[start:stop], start=start):
            x, cache = layer.forward(self._slice(params, i), x)
            caches.append((i, cache))
        return x, caches

    def backward(self, params, caches, grad, need_param_grads=True, trainable=None):
        """Backpropagate ``grad``; returns ``(dL/dinput, param_grads)``.

        ``trainable`` restricts which parameter gradients are computed.
        """
        grads = {}
        for i, cache in reversed(caches):
            want = need_param_grads and (trainable is None or any(
                k.startswith(f"{i}.") for k in trainable))
            grad, g = self.layers[i].backward(self._slice(params, i), cache, grad, want)
            for name, value in g.items():
                grads[f"{i}.{name}"] = value
        return grad, grads

    def describe(self):
        return {"input_shape": list(self.input_shape),
                "layers": [layer.describe() for layer in self.layers]}

    @classmethod
    def from_description(cls, d):
        return cls([layer_from_dict(x) for x in d["layers"]], d["input_shape"])


def conv_stack(input_shape=(1, 32, 32), num_classes=26, channels=(8, 16)) -> Sequential:
    """Conv(3x3, s2) + ReLU blocks followed by an affine head."""
    layers = []
    shape = tuple(input_shape)
    in_c = shape[0]
    for out_c in channels:
        conv = Conv2d(in_c, out_c)
        layers += [conv, ReLU()]
        shape = conv.output_shape(shape)
        in_c = out_c
    layers += [Flatten(), Linear(int(np.prod(shape)), num_classes)]
    return Sequential(layers, input_shape)


def cross_entropy(logits: np.ndarray, labels: np.ndarray, smoothing: float = 0.0):
    """Mean softmax cross-entropy and its gradient w.r.t. ``logits``.

    With ``smoothing > 0`` the target puts ``1 - smoothing`` on the label and
    spreads ``smoothing`` uniformly over the other classes.
    """
    n, k = logits.shape
    z = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    log_probs = z - logsum[:, None]
    rows = np.arange(n)
    if smoothing:
        target = np.full((n, k), smoothing / (k - 1))
        target[rows, labels] = 1.0 - smoothing
        loss = float(np.mean(-(target * log_probs).sum(axis=1)))
        return loss, (np.exp(log_probs) - target) / n
    loss = float(np.mean(-log_probs[rows, labels]))
    probs = np.exp(log_probs)
    probs[rows, labels] -= 1.0
    return loss, probs / n
