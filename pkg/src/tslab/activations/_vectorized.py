"""Pure-numpy elementwise activation kernels (fallback path).

Mirrors ``_kernels`` branch for branch, but operates on whole float64 arrays.
"""

import numpy as np

from ._kernels import (
    ELISH,
    ELU,
    ESWISH,
    EXP_MAX,
    LEAKY_RELU,
    PRELU,
    RELU,
    SATURATION,
    SIGMOID,
    SOFTPLUS,
    SOFTSIGN,
    SWISH,
    TANH,
    TANHSOFT,
)


def sigmoid(x):
    # exp(-|x|) never overflows
    z = np.exp(-np.abs(x))
    return np.where(x >= 0.0, 1.0 / (1.0 + z), z / (1.0 + z))


def softplus(x):
    return np.maximum(x, 0.0) + np.log1p(np.exp(-np.abs(x)))


def tanh_sech2(u):
    au = np.abs(u)
    sat = au > SATURATION
    em = np.expm1(-2.0 * np.where(sat, 0.0, au))
    q = 2.0 + em
    t = np.where(sat, 1.0, (0.0 - em) / q)
    t = np.where(u < 0.0, -t, t)
    return t, np.where(sat, 0.0, 4.0 * (em + 1.0) / (q * q))


def _tanh_argument(a, b, g, x):
    ax = a * x
    if b == 0.0:
        return ax, np.zeros_like(x)
    gx = g * x
    w = b * np.exp(np.minimum(gx, EXP_MAX))
    w = np.where(gx > EXP_MAX, np.inf, w)
    with np.errstate(invalid="ignore"):
        u = np.where(np.isinf(w), np.inf, ax + w)
    return u, w


def log_factor(d, x):
    if d == 0.0:
        return x.copy(), np.ones_like(x)
    e = np.exp(-np.abs(x))
    pos = x > 0.0
    lf = np.where(pos, x + np.log1p(d * e), np.log(d) + np.log1p(e / d))
    r = np.where(pos, 1.0 / (1.0 + d * e), e / (d + e))
    return lf, r


def family_value(a, b, g, d, x):
    u, _ = _tanh_argument(a, b, g, x)
    t, _ = tanh_sech2(u)
    lf, _ = log_factor(d, x)
    return t * lf


def family_deriv(a, b, g, d, x):
    u, w = _tanh_argument(a, b, g, x)
    t, s = tanh_sech2(u)
    lf, r = log_factor(d, x)
    first = t * r
    live = s != 0.0
    # only form the product-rule term where sech^2 survives, so inf*0 never occurs
    second = np.zeros_like(x)
    if live.any():
        second[live] = (a + g * w[live]) * s[live] * lf[live]
    return first + second


def value(code, p0, p1, p2, p3, x):
    x = np.asarray(x, dtype=np.float64)
    if code == TANHSOFT:
        return family_value(p0, p1, p2, p3, x)
    if code == SIGMOID:
        return sigmoid(x)
    if code == TANH:
        return tanh_sech2(x)[0]
    if code == RELU:
        return np.where(x > 0.0, x, 0.0)
    if code in (LEAKY_RELU, PRELU):
        return np.where(x > 0.0, x, p0 * x)
    if code == SWISH:
        return x * sigmoid(x)
    if code == ESWISH:
        return p0 * (x * sigmoid(x))
    if code == ELISH:
        return np.where(x >= 0.0, x, np.expm1(np.minimum(x, 0.0))) * sigmoid(x)
    if code == SOFTSIGN:
        return x / (1.0 + np.abs(x))
    if code == ELU:
        return np.where(x > 0.0, x, p0 * np.expm1(np.minimum(x, 0.0)))
    if code == SOFTPLUS:
        return softplus(x)
    raise ValueError(f"unknown activation code {code}")


def deriv(code, p0, p1, p2, p3, x):
    x = np.asarray(x, dtype=np.float64)
    if code == TANHSOFT:
        return family_deriv(p0, p1, p2, p3, x)
    if code == SIGMOID:
        return sigmoid(x) * sigmoid(-x)
    if code == TANH:
        return tanh_sech2(x)[1]
    if code == RELU:
        return np.where(x >= 0.0, 1.0, 0.0)
    if code in (LEAKY_RELU, PRELU):
        return np.where(x >= 0.0, 1.0, p0)
    if code == SWISH:
        return sigmoid(x) * (1.0 + x * sigmoid(-x))
    if code == ESWISH:
        return p0 * sigmoid(x) * (1.0 + x * sigmoid(-x))
    if code == ELISH:
        s = sigmoid(x)
        xn = np.minimum(x, 0.0)
        neg = np.exp(xn) * s + np.expm1(xn) * s * sigmoid(-x)
        return np.where(x >= 0.0, s * (1.0 + x * sigmoid(-x)), neg)
    if code == SOFTSIGN:
        q = 1.0 + np.abs(x)
        return 1.0 / (q * q)
    if code == ELU:
        return np.where(x > 0.0, 1.0, p0 * np.exp(np.minimum(x, 0.0)))
    if code == SOFTPLUS:
        return sigmoid(x)
    raise ValueError(f"unknown activation code {code}")
