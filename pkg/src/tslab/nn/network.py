from __future__ import annotations

import copy
from dataclasses import dataclass

import numpy as np

from ..activations import ActivationSpec
from .layers import Activation, ConfigurationError, Conv2D, Dense, Dropout, Flatten, Layer, MaxPool2D


class Network:
    """Ordered layer list with a fixed input shape and class count."""

    def __init__(self, layers: list[Layer], input_shape, num_classes: int, dtype=np.float32):
        self.layers = list(layers)
        self.input_shape = tuple(int(s) for s in input_shape)
        self.num_classes = int(num_classes)
        self.dtype = np.dtype(dtype)
        shape = self.input_shape
        self.shapes = [shape]
        for layer in self.layers:
            shape = layer.output_shape(shape)
            self.shapes.append(shape)
        if shape != (self.num_classes,):
            raise ConfigurationError(f"network output {shape} does not match {self.num_classes} classes")
        for layer in self.layers:
            for name, p in layer.params.items():
                layer.params[name] = p.astype(self.dtype)

    def named_params(self) -> dict[str, np.ndarray]:
        return {f"{i}.{name}": p for i, layer in enumerate(self.layers) for name, p in layer.params.items()}

    def param_count(self) -> int:
        return sum(p.size for p in self.named_params().values())

    def checksum(self) -> str:
        import hashlib

        h = hashlib.sha256()
        for name, p in self.named_params().items():
            h.update(name.encode())
            h.update(np.ascontiguousarray(p).tobytes())
        return h.hexdigest()

    def astype(self, dtype) -> "Network":
        clone = copy.deepcopy(self)
        clone.dtype = np.dtype(dtype)
        for layer in clone.layers:
            for name, p in layer.params.items():
                layer.params[name] = p.astype(clone.dtype)
        return clone

    def with_activation(self, spec: ActivationSpec) -> "Network":
        """Copy with every Activation layer swapped for ``spec``; parameters untouched."""
        clone = copy.deepcopy(self)
        for layer in clone.layers:
            if isinstance(layer, Activation):
                layer.spec = spec
        return clone

    def __repr__(self):
        inner = ", ".join(repr(layer) for layer in self.layers)
        return f"Network(input={self.input_shape}, classes={self.num_classes}, [{inner}])"


def init_params(net: Network, seed: int) -> Network:
    """He-normal weights (std sqrt(2/fan_in)), zero biases; in place, deterministic in ``seed``."""
    rng = np.random.default_rng(np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF))
    for layer in net.layers:
        layer.init_params(rng, net.dtype)
    return net


@dataclass
class ForwardCache:
    layer_caches: list
    batch_shape: tuple


def forward(net: Network, batch, train_mode: bool = False, rng: np.random.Generator | None = None):
    """Run ``batch`` ([B] + input shape) through ``net``; returns (logits, cache)."""
    batch = np.asarray(batch)
    if batch.shape[1:] != net.input_shape:
        raise ConfigurationError(f"batch shape {batch.shape} does not match input shape {net.input_shape}")
    x = batch.astype(net.dtype, copy=False)
    caches = []
    for layer in net.layers:
        x, c = layer.forward(x, train_mode, rng)
        caches.append(c)
    return x, ForwardCache(caches, batch.shape)


def backward(net: Network, cache: ForwardCache, loss_grad) -> dict[str, np.ndarray]:
    """Gradients of the loss for every named parameter, shaped like the parameter."""
    if len(cache.layer_caches) != len(net.layers):
        raise RuntimeError("forward cache does not belong to this network")
    dy = np.asarray(loss_grad, dtype=net.dtype)
    if dy.shape != (cache.batch_shape[0], net.num_classes):
        raise RuntimeError(f"loss gradient shape {dy.shape} does not match logits")
    grads: dict[str, np.ndarray] = {}
    # the first layer that owns parameters is the last one that needs an input gradient
    first_param = next((i for i, layer in enumerate(net.layers) if layer.params), len(net.layers))
    for i in range(len(net.layers) - 1, -1, -1):
        layer = net.layers[i]
        dy, g = layer.backward(dy, cache.layer_caches[i], need_dx=i > first_param)
        for name, value in g.items():
            grads[f"{i}.{name}"] = value
        if dy is None:
            break
    for i, layer in enumerate(net.layers):
        for name, p in layer.params.items():
            grads.setdefault(f"{i}.{name}", np.zeros_like(p))
    return {name: grads[name] for name in net.named_params()}


# ---------------------------------------------------------------- topologies


@dataclass(frozen=True)
class Topology:
    """Declared stand-in architecture; every field is visible in run configs."""

    name: str = "cnn5"
    conv_channels: tuple[int, ...] = (32, 64)
    kernel_size: int = 3
    dense_units: int = 128
    dropout: float = 0.25


TOPOLOGIES = ("cnn5", "cnn_cifar", "mlp")


def build_network(
    topology: Topology | str,
    activation: ActivationSpec,
    input_shape,
    num_classes: int,
    dtype=np.float32,
) -> Network:
    """Build an uninitialised network.

    ``cnn5``: Conv -> Act -> Pool -> Conv -> Act -> Pool -> Flatten -> Dense
    -> Act -> Dropout -> Dense. ``cnn_cifar`` is the same stack with wider
    defaults for 3-channel input. ``mlp``: Flatten -> Dense -> Act -> Dense.
    """
    if isinstance(topology, str):
        topology = default_topology(topology)
    in_shape = tuple(input_shape)
    layers: list[Layer] = []
    if topology.name in ("cnn5", "cnn_cifar"):
        c = in_shape[0]
        for out_c in topology.conv_channels:
            layers += [Conv2D(c, out_c, topology.kernel_size), Activation(activation), MaxPool2D()]
            c = out_c
        layers.append(Flatten())
        shape = in_shape
        for layer in layers:
            shape = layer.output_shape(shape)
        layers += [
            Dense(shape[0], topology.dense_units),
            Activation(activation),
            Dropout(topology.dropout),
            Dense(topology.dense_units, num_classes),
        ]
    elif topology.name == "mlp":
        flat = int(np.prod(in_shape))
        layers = [
            Flatten(),
            Dense(flat, topology.dense_units),
            Activation(activation),
            Dense(topology.dense_units, num_classes),
        ]
    else:
        raise ConfigurationError(f"unknown topology {topology.name!r}; choose from {TOPOLOGIES}")
    return Network(layers, in_shape, num_classes, dtype)


def default_topology(name: str) -> Topology:
    if name == "cnn5":
        return Topology("cnn5")
    if name == "cnn_cifar":
        return Topology("cnn_cifar", conv_channels=(32, 64), dense_units=256, dropout=0.25)
    if name == "mlp":
        return Topology("mlp", conv_channels=(), dense_units=64, dropout=0.0)
    raise ConfigurationError(f"unknown topology {name!r}; choose from {TOPOLOGIES}")
