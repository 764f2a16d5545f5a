"""Activation-function laboratory: the TanhSoft family, baseline activations,
a small numpy training core, and a reproducible search harness."""

__version__ = "0.1.0"
