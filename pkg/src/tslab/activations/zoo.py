"""Public evaluation API for the TanhSoft family and the baseline activations.

Scalar functions return Python floats computed in float64. The ``*_map``
functions apply the same kernels elementwise to arrays; float32 inputs are
evaluated in float64 and rounded once on store.
"""

from __future__ import annotations

import math

import numpy as np

from .. import _accel
from . import _kernels, _vectorized
from .spec import ActivationSpec, Hyperparams, Kind

__all__ = [
    "DomainError",
    "tanhsoft_eval",
    "tanhsoft_deriv",
    "tanhsoft1_eval",
    "tanhsoft1_deriv",
    "tanhsoft2_eval",
    "tanhsoft2_deriv",
    "baseline_eval",
    "baseline_deriv",
    "activation_eval",
    "activation_deriv",
    "eval_map",
    "deriv_map",
    "eval_deriv_map",
]


class DomainError(ValueError):
    """Raised for NaN inputs."""


def _scalar(x) -> float:
    x = float(x)
    if math.isnan(x):
        raise DomainError("activation input is NaN")
    return x


def _scalar_value(args, x: float) -> float:
    if _accel.NUMBA_ENABLED:
        return float(_kernels.value(*args, x))
    return float(_vectorized.value(*args, np.array([x]))[0])


def _scalar_deriv(args, x: float) -> float:
    if _accel.NUMBA_ENABLED:
        return float(_kernels.deriv(*args, x))
    return float(_vectorized.deriv(*args, np.array([x]))[0])


def _family_args(h: Hyperparams):
    return (int(Kind.TANHSOFT), h.alpha, h.beta, h.gamma, h.delta)


def tanhsoft_eval(h: Hyperparams, x: float) -> float:
    """tanh(alpha*x + beta*e^(gamma*x)) * ln(delta + e^x)."""
    return _scalar_value(_family_args(h), _scalar(x))


def tanhsoft_deriv(h: Hyperparams, x: float) -> float:
    return _scalar_deriv(_family_args(h), _scalar(x))


def tanhsoft1_eval(alpha: float, x: float) -> float:
    return activation_eval(ActivationSpec.tanhsoft1(alpha), x)


def tanhsoft1_deriv(alpha: float, x: float) -> float:
    return activation_deriv(ActivationSpec.tanhsoft1(alpha), x)


def tanhsoft2_eval(beta: float, gamma: float, x: float) -> float:
    return activation_eval(ActivationSpec.tanhsoft2(beta, gamma), x)


def tanhsoft2_deriv(beta: float, gamma: float, x: float) -> float:
    return activation_deriv(ActivationSpec.tanhsoft2(beta, gamma), x)


def activation_eval(spec: ActivationSpec, x: float) -> float:
    return _scalar_value(spec.kernel_args(), _scalar(x))


def activation_deriv(spec: ActivationSpec, x: float) -> float:
    return _scalar_deriv(spec.kernel_args(), _scalar(x))


# baselines go through the same dispatch; kept as named entry points
baseline_eval = activation_eval
baseline_deriv = activation_deriv


def _prepare(t):
    t = np.asarray(t)
    if not np.issubdtype(t.dtype, np.floating):
        t = t.astype(np.float64)
    if np.isnan(t).any():
        raise DomainError("activation input contains NaN")
    return np.ascontiguousarray(t)


def eval_map(spec: ActivationSpec, t) -> np.ndarray:
    """Elementwise value; output has the input's shape and float dtype."""
    t = _prepare(t)
    args = spec.kernel_args()
    if _accel.NUMBA_ENABLED:
        out = np.empty_like(t)
        _kernels.value_array(*args, t, out)
        return out
    return _vectorized.value(*args, t).astype(t.dtype, copy=False)


def deriv_map(spec: ActivationSpec, t) -> np.ndarray:
    t = _prepare(t)
    args = spec.kernel_args()
    if _accel.NUMBA_ENABLED:
        out = np.empty_like(t)
        _kernels.deriv_array(*args, t, out)
        return out
    return _vectorized.deriv(*args, t).astype(t.dtype, copy=False)


def eval_deriv_map(spec: ActivationSpec, t) -> tuple[np.ndarray, np.ndarray]:
    """Value and derivative in one pass (what a forward pass caches)."""
    t = _prepare(t)
    args = spec.kernel_args()
    if _accel.NUMBA_ENABLED:
        out = np.empty_like(t)
        dout = np.empty_like(t)
        _kernels.value_deriv_array(*args, t, out, dout)
        return out, dout
    return (
        _vectorized.value(*args, t).astype(t.dtype, copy=False),
        _vectorized.deriv(*args, t).astype(t.dtype, copy=False),
    )
