"""Independent reference evaluators used by the test-suite.

The high-precision oracle evaluates every activation straight from its
textbook definition with mpmath at 60 significant digits; no stabilised
branches, no shared code with the package.
"""

import mpmath
import numpy as np

from tslab.activations import ActivationSpec, Kind

ORACLE_DPS = 60


def _mp_sigmoid(x):
    return 1 / (1 + mpmath.exp(-x))


def oracle_value(spec: ActivationSpec, x: float) -> float:
    with mpmath.workdps(ORACLE_DPS):
        x = mpmath.mpf(x)
        p = [mpmath.mpf(v) for v in spec.params]
        k = spec.kind
        if k is Kind.TANHSOFT:
            a, b, g, d = p
            return float(mpmath.tanh(a * x + b * mpmath.exp(g * x)) * mpmath.log(d + mpmath.exp(x)))
        if k is Kind.TANHSOFT1:
            return float(mpmath.tanh(p[0] * x) * mpmath.log(1 + mpmath.exp(x)))
        if k is Kind.TANHSOFT2:
            return float(x * mpmath.tanh(p[0] * mpmath.exp(p[1] * x)))
        if k is Kind.SIGMOID:
            return float(_mp_sigmoid(x))
        if k is Kind.TANH:
            return float(mpmath.tanh(x))
        if k is Kind.RELU:
            return float(max(x, 0))
        if k in (Kind.LEAKY_RELU, Kind.PRELU):
            return float(x if x > 0 else p[0] * x)
        if k is Kind.SWISH:
            return float(x * _mp_sigmoid(x))
        if k is Kind.ESWISH:
            return float(p[0] * x * _mp_sigmoid(x))
        if k is Kind.ELISH:
            if x >= 0:
                return float(x / (1 + mpmath.exp(-x)))
            return float((mpmath.exp(x) - 1) / (1 + mpmath.exp(-x)))
        if k is Kind.SOFTSIGN:
            return float(x / (1 + abs(x)))
        if k is Kind.ELU:
            return float(x if x > 0 else p[0] * (mpmath.exp(x) - 1))
        if k is Kind.SOFTPLUS:
            return float(mpmath.log(1 + mpmath.exp(x)))
    raise AssertionError(k)


def central_diff(f, x, h=1e-6):
    """Vectorised central difference of an array function."""
    x = np.asarray(x, dtype=np.float64)
    return (f(x + h) - f(x - h)) / (2 * h)


# in-range parameter samplers, u is a point of [0, 1]^4
def params_for(kind: Kind, u) -> tuple[float, ...]:
    if kind is Kind.TANHSOFT:
        return (3.0 * u[0], 1.999 * u[1], 0.001 + 3.998 * u[2], float(u[3] >= 0.5))
    if kind is Kind.TANHSOFT1:
        return (3.0 * u[0],)
    if kind is Kind.TANHSOFT2:
        return (1.999 * u[1], 0.001 + 3.998 * u[2])
    if kind in (Kind.LEAKY_RELU,):
        return (0.01,)
    if kind is Kind.PRELU:
        return (u[0],)
    if kind is Kind.ESWISH:
        return (1.0 + u[0],)
    if kind is Kind.ELU:
        return (0.1 + 1.9 * u[0],)
    return ()
