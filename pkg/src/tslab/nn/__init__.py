from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .layers import Activation, ConfigurationError, Conv2D, Dense, Dropout, Flatten, Layer, LayerKind, MaxPool2D
from .network import (
    TOPOLOGIES,
    ForwardCache,
    Network,
    Topology,
    backward,
    build_network,
    default_topology,
    forward,
    init_params,
)

__all__ = [
    "TOPOLOGIES",
    "Activation",
    "CheckpointError",
    "ConfigurationError",
    "Conv2D",
    "Dense",
    "Dropout",
    "Flatten",
    "ForwardCache",
    "Layer",
    "LayerKind",
    "MaxPool2D",
    "Network",
    "Topology",
    "backward",
    "build_network",
    "default_topology",
    "forward",
    "init_params",
    "load_checkpoint",
    "save_checkpoint",
]
