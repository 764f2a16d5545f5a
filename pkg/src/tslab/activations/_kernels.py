"""Scalar activation kernels and the elementwise loops built on them.

Everything here is written in the numba-compatible subset of Python; the
functions are compiled with ``njit`` when numba is importable. Kernels take a
kind code plus four float parameters (see ``ActivationSpec.kernel_args``).
"""

import math

import numpy as np

from .._accel import njit

# |u| above this: tanh(u) == +-1 and sech^2(u) is treated as 0
SATURATION = 20.0
# largest argument for which exp() is finite
EXP_MAX = 709.0

TANHSOFT = 0
SIGMOID = 3
TANH = 4
RELU = 5
LEAKY_RELU = 6
PRELU = 7
SWISH = 8
ESWISH = 9
ELISH = 10
SOFTSIGN = 11
ELU = 12
SOFTPLUS = 13


@njit
def sigmoid(x):
    if x >= 0.0:
        return 1.0 / (1.0 + math.exp(-x))
    z = math.exp(x)
    return z / (1.0 + z)


@njit
def softplus(x):
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


@njit
def tanh_sech2(u):
    """(tanh(u), sech^2(u)) from a single expm1 call."""
    au = abs(u)
    if au > SATURATION:
        return (1.0 if u > 0.0 else -1.0), 0.0
    em = math.expm1(-2.0 * au)
    q = 2.0 + em
    t = (0.0 - em) / q
    if u < 0.0:
        t = -t
    return t, 4.0 * (em + 1.0) / (q * q)


@njit
def _tanh_argument(a, b, g, x):
    """Return (u, w) with w = b*exp(g*x) and u = a*x + w.

    w overflowing is reported as inf and forces u = +inf (the exponential
    dominates any finite linear term).
    """
    ax = a * x
    if b == 0.0:
        return ax, 0.0
    gx = g * x
    if gx > EXP_MAX:
        return math.inf, math.inf
    w = b * math.exp(gx)
    if w == math.inf:
        return math.inf, math.inf
    return ax + w, w


@njit
def log_factor(d, x):
    """(ln(d + e^x), e^x / (d + e^x)); exactly (x, 1) when the switch is off."""
    if d == 0.0:
        return x, 1.0
    e = math.exp(-abs(x))
    if x > 0.0:
        return x + math.log1p(d * e), 1.0 / (1.0 + d * e)
    return math.log(d) + math.log1p(e / d), e / (d + e)


@njit
def family_value(a, b, g, d, x):
    u, w = _tanh_argument(a, b, g, x)
    t, s = tanh_sech2(u)
    lf, r = log_factor(d, x)
    return t * lf


@njit
def family_deriv(a, b, g, d, x):
    u, w = _tanh_argument(a, b, g, x)
    t, s = tanh_sech2(u)
    lf, r = log_factor(d, x)
    if s == 0.0:
        # saturated: skips (a + g*w) * 0, which may be inf * 0
        return t * r
    return t * r + (a + g * w) * s * lf


@njit
def family_value_deriv(a, b, g, d, x):
    u, w = _tanh_argument(a, b, g, x)
    t, s = tanh_sech2(u)
    lf, r = log_factor(d, x)
    if s == 0.0:
        return t * lf, t * r
    return t * lf, t * r + (a + g * w) * s * lf


@njit
def value(code, p0, p1, p2, p3, x):
    if code == TANHSOFT:
        return family_value(p0, p1, p2, p3, x)
    if code == SIGMOID:
        return sigmoid(x)
    if code == TANH:
        return tanh_sech2(x)[0]
    if code == RELU:
        return x if x > 0.0 else 0.0
    if code == LEAKY_RELU or code == PRELU:
        return x if x > 0.0 else p0 * x
    if code == SWISH:
        return x * sigmoid(x)
    if code == ESWISH:
        return p0 * (x * sigmoid(x))
    if code == ELISH:
        if x >= 0.0:
            return x * sigmoid(x)
        return math.expm1(x) * sigmoid(x)
    if code == SOFTSIGN:
        return x / (1.0 + abs(x))
    if code == ELU:
        return x if x > 0.0 else p0 * math.expm1(x)
    if code == SOFTPLUS:
        return softplus(x)
    return math.nan


@njit
def deriv(code, p0, p1, p2, p3, x):
    if code == TANHSOFT:
        return family_deriv(p0, p1, p2, p3, x)
    if code == SIGMOID:
        return sigmoid(x) * sigmoid(-x)
    if code == TANH:
        return tanh_sech2(x)[1]
    # kinks: right derivative at 0
    if code == RELU:
        return 1.0 if x >= 0.0 else 0.0
    if code == LEAKY_RELU or code == PRELU:
        return 1.0 if x >= 0.0 else p0
    if code == SWISH:
        return sigmoid(x) * (1.0 + x * sigmoid(-x))
    if code == ESWISH:
        return p0 * sigmoid(x) * (1.0 + x * sigmoid(-x))
    if code == ELISH:
        s = sigmoid(x)
        if x >= 0.0:
            return s * (1.0 + x * sigmoid(-x))
        return math.exp(x) * s + math.expm1(x) * s * sigmoid(-x)
    if code == SOFTSIGN:
        q = 1.0 + abs(x)
        return 1.0 / (q * q)
    if code == ELU:
        return 1.0 if x > 0.0 else p0 * math.exp(x)
    if code == SOFTPLUS:
        return sigmoid(x)
    return math.nan


@njit
def value_array(code, p0, p1, p2, p3, x, out):
    xf = x.ravel()
    of = out.ravel()
    for i in range(xf.size):
        of[i] = value(code, p0, p1, p2, p3, np.float64(xf[i]))


@njit
def deriv_array(code, p0, p1, p2, p3, x, out):
    xf = x.ravel()
    of = out.ravel()
    for i in range(xf.size):
        of[i] = deriv(code, p0, p1, p2, p3, np.float64(xf[i]))


@njit
def value_deriv_array(code, p0, p1, p2, p3, x, out, dout):
    xf = x.ravel()
    of = out.ravel()
    df = dout.ravel()
    if code == TANHSOFT:
        for i in range(xf.size):
            v, dv = family_value_deriv(p0, p1, p2, p3, np.float64(xf[i]))
            of[i] = v
            df[i] = dv
        return
    for i in range(xf.size):
        xi = np.float64(xf[i])
        of[i] = value(code, p0, p1, p2, p3, xi)
        df[i] = deriv(code, p0, p1, p2, p3, xi)
