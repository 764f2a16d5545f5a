"""Layer stack with hand-written forward and backward passes.

Arrays are laid out NCHW. Every layer exposes ``forward(x, train, rng)``
returning ``(y, cache)`` and ``backward(dy, cache, need_dx)`` returning
``(dx, grads)`` where ``grads`` mirrors ``params``.
"""

from __future__ import annotations

import enum

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..activations import ActivationSpec, eval_deriv_map, eval_map
from ._pool import maxpool_backward, maxpool_forward


class ConfigurationError(ValueError):
    """Inconsistent layer shapes or batch shape."""


class LayerKind(enum.IntEnum):
    # values are the checkpoint tags
    DENSE = 0
    CONV2D = 1
    MAXPOOL2D = 2
    FLATTEN = 3
    ACTIVATION = 4
    DROPOUT = 5


class Layer:
    kind: LayerKind

    def __init__(self):
        self.params: dict[str, np.ndarray] = {}

    def output_shape(self, in_shape: tuple[int, ...]) -> tuple[int, ...]:
        return in_shape

    def init_params(self, rng: np.random.Generator, dtype) -> None:
        pass

    def forward(self, x, train, rng):
        raise NotImplementedError

    def backward(self, dy, cache, need_dx=True):
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


def _he_normal(rng, shape, fan_in, dtype):
    return (rng.standard_normal(shape) * np.sqrt(2.0 / fan_in)).astype(dtype)


def _bias_grad(dy, axes):
    # reductions accumulate in float64
    return dy.sum(axis=axes, dtype=np.float64).astype(dy.dtype)


class Dense(Layer):
    kind = LayerKind.DENSE

    def __init__(self, in_features: int, out_features: int):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.params = {
            "weight": np.zeros((in_features, out_features), np.float32),
            "bias": np.zeros(out_features, np.float32),
        }

    def output_shape(self, in_shape):
        if in_shape != (self.in_features,):
            raise ConfigurationError(f"Dense expects input ({self.in_features},), got {in_shape}")
        return (self.out_features,)

    def init_params(self, rng, dtype):
        self.params["weight"] = _he_normal(rng, (self.in_features, self.out_features), self.in_features, dtype)
        self.params["bias"] = np.zeros(self.out_features, dtype)

    def forward(self, x, train, rng):
        return x @ self.params["weight"] + self.params["bias"], x

    def backward(self, dy, x, need_dx=True):
        grads = {"weight": x.T @ dy, "bias": _bias_grad(dy, 0)}
        dx = dy @ self.params["weight"].T if need_dx else None
        return dx, grads

    def __repr__(self):
        return f"Dense({self.in_features}, {self.out_features})"


class Conv2D(Layer):
    """Valid-padding, stride-1 convolution via an im2col matrix product."""

    kind = LayerKind.CONV2D

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int):
        super().__init__()
        self.in_channels = in_channels
        self.out_channels = out_channels
        self.kernel_size = kernel_size
        k = kernel_size
        self.params = {
            "weight": np.zeros((out_channels, in_channels, k, k), np.float32),
            "bias": np.zeros(out_channels, np.float32),
        }

    def output_shape(self, in_shape):
        if len(in_shape) != 3 or in_shape[0] != self.in_channels:
            raise ConfigurationError(f"Conv2D expects ({self.in_channels}, H, W), got {in_shape}")
        _, h, w = in_shape
        k = self.kernel_size
        if h < k or w < k:
            raise ConfigurationError(f"Conv2D kernel {k} larger than input {h}x{w}")
        return (self.out_channels, h - k + 1, w - k + 1)

    def init_params(self, rng, dtype):
        k = self.kernel_size
        fan_in = self.in_channels * k * k
        self.params["weight"] = _he_normal(rng, (self.out_channels, self.in_channels, k, k), fan_in, dtype)
        self.params["bias"] = np.zeros(self.out_channels, dtype)

    def forward(self, x, train, rng):
        B, C, H, W = x.shape
        k = self.kernel_size
        Ho, Wo = H - k + 1, W - k + 1
        win = sliding_window_view(x, (k, k), axis=(2, 3))  # B, C, Ho, Wo, k, k
        cols = np.ascontiguousarray(win.transpose(0, 2, 3, 1, 4, 5)).reshape(B * Ho * Wo, C * k * k)
        wmat = self.params["weight"].reshape(self.out_channels, -1)
        y = cols @ wmat.T + self.params["bias"]
        y = y.reshape(B, Ho, Wo, self.out_channels).transpose(0, 3, 1, 2)
        return np.ascontiguousarray(y), (cols, x.shape)

    def backward(self, dy, cache, need_dx=True):
        cols, in_shape = cache
        B, C, H, W = in_shape
        k = self.kernel_size
        F = self.out_channels
        Ho, Wo = H - k + 1, W - k + 1
        dmat = dy.transpose(0, 2, 3, 1).reshape(B * Ho * Wo, F)
        grads = {
            "weight": (dmat.T @ cols).reshape(self.params["weight"].shape),
            "bias": _bias_grad(dmat, 0),
        }
        if not need_dx:
            return None, grads
        dcols = (dmat @ self.params["weight"].reshape(F, -1)).reshape(B, Ho, Wo, C, k, k)
        dx = np.zeros(in_shape, dtype=dy.dtype)
        for i in range(k):
            for j in range(k):
                dx[:, :, i : i + Ho, j : j + Wo] += dcols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
        return dx, grads

    def __repr__(self):
        return f"Conv2D({self.in_channels}, {self.out_channels}, {self.kernel_size})"


class MaxPool2D(Layer):
    """2x2 window, stride 2; odd trailing rows/columns are dropped."""

    kind = LayerKind.MAXPOOL2D

    def output_shape(self, in_shape):
        if len(in_shape) != 3 or in_shape[1] < 2 or in_shape[2] < 2:
            raise ConfigurationError(f"MaxPool2D needs (C, H>=2, W>=2), got {in_shape}")
        c, h, w = in_shape
        return (c, h // 2, w // 2)

    def forward(self, x, train, rng):
        out, idx = maxpool_forward(x)
        return out, (idx, x.shape)

    def backward(self, dy, cache, need_dx=True):
        idx, in_shape = cache
        return maxpool_backward(dy, idx, in_shape), {}


class Flatten(Layer):
    kind = LayerKind.FLATTEN

    def output_shape(self, in_shape):
        return (int(np.prod(in_shape)),)

    def forward(self, x, train, rng):
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, dy, shape, need_dx=True):
        return dy.reshape(shape), {}


class Activation(Layer):
    kind = LayerKind.ACTIVATION

    def __init__(self, spec: ActivationSpec):
        super().__init__()
        self.spec = spec

    def forward(self, x, train, rng):
        if not train:
            return eval_map(self.spec, x), None
        y, d = eval_deriv_map(self.spec, x)
        return y, d

    def backward(self, dy, d, need_dx=True):
        if d is None:
            raise RuntimeError("Activation.backward needs a cache from a training-mode forward")
        return dy * d, {}

    def __repr__(self):
        return f"Activation({self.spec})"


class Dropout(Layer):
    """Inverted dropout; identity outside training mode."""

    kind = LayerKind.DROPOUT

    def __init__(self, rate: float):
        super().__init__()
        if not 0.0 <= rate < 1.0:
            raise ConfigurationError(f"dropout rate must be in [0, 1), got {rate}")
        self.rate = rate

    def forward(self, x, train, rng):
        if not train or self.rate == 0.0:
            return x, None
        if rng is None:
            raise ConfigurationError("training-mode dropout needs a random generator")
        mask = (rng.random(x.shape) >= self.rate).astype(x.dtype) / x.dtype.type(1.0 - self.rate)
        return x * mask, mask

    def backward(self, dy, mask, need_dx=True):
        return (dy if mask is None else dy * mask), {}

    def __repr__(self):
        return f"Dropout({self.rate})"
