"""2x2 stride-2 max pooling kernels.

Both paths pick the first maximum in row-major window order, so they route
gradients to the same input position and agree bit for bit.
"""

import numpy as np

from .. import _accel
from .._accel import njit


@njit
def _pool_forward_nb(x, out, idx):
    B, C, Ho, Wo = out.shape
    for b in range(B):
        for c in range(C):
            for i in range(Ho):
                for j in range(Wo):
                    r = 2 * i
                    s = 2 * j
                    best = x[b, c, r, s]
                    k = 0
                    v = x[b, c, r, s + 1]
                    if v > best:
                        best = v
                        k = 1
                    v = x[b, c, r + 1, s]
                    if v > best:
                        best = v
                        k = 2
                    v = x[b, c, r + 1, s + 1]
                    if v > best:
                        best = v
                        k = 3
                    out[b, c, i, j] = best
                    idx[b, c, i, j] = k


@njit
def _pool_backward_nb(dy, idx, dx):
    B, C, Ho, Wo = dy.shape
    for b in range(B):
        for c in range(C):
            for i in range(Ho):
                for j in range(Wo):
                    k = idx[b, c, i, j]
                    dx[b, c, 2 * i + k // 2, 2 * j + k % 2] += dy[b, c, i, j]


def _windows(x):
    B, C, H, W = x.shape
    Ho, Wo = H // 2, W // 2
    v = x[:, :, : 2 * Ho, : 2 * Wo].reshape(B, C, Ho, 2, Wo, 2)
    return v.transpose(0, 1, 2, 4, 3, 5).reshape(B, C, Ho, Wo, 4)


def _pool_forward_np(x):
    win = _windows(x)
    idx = np.argmax(win, axis=-1).astype(np.int8)
    out = np.take_along_axis(win, idx[..., None].astype(np.intp), axis=-1)[..., 0]
    return out, idx


def _pool_backward_np(dy, idx, in_shape):
    B, C, Ho, Wo = dy.shape
    win = np.zeros((B, C, Ho, Wo, 4), dtype=dy.dtype)
    np.put_along_axis(win, idx[..., None].astype(np.intp), dy[..., None], axis=-1)
    dx = np.zeros(in_shape, dtype=dy.dtype)
    dx[:, :, : 2 * Ho, : 2 * Wo] = win.reshape(B, C, Ho, Wo, 2, 2).transpose(0, 1, 2, 4, 3, 5).reshape(
        B, C, 2 * Ho, 2 * Wo
    )
    return dx


def maxpool_forward(x, use_numba=None):
    """Return (pooled, argmax index in 0..3) for a [B, C, H, W] array."""
    if use_numba is None:
        use_numba = _accel.NUMBA_ENABLED
    if use_numba:
        B, C, H, W = x.shape
        out = np.empty((B, C, H // 2, W // 2), dtype=x.dtype)
        idx = np.empty(out.shape, dtype=np.int8)
        _pool_forward_nb(np.ascontiguousarray(x), out, idx)
        return out, idx
    return _pool_forward_np(x)


def maxpool_backward(dy, idx, in_shape, use_numba=None):
    if use_numba is None:
        use_numba = _accel.NUMBA_ENABLED
    if use_numba:
        dx = np.zeros(in_shape, dtype=dy.dtype)
        _pool_backward_nb(np.ascontiguousarray(dy), idx, dx)
        return dx
    return _pool_backward_np(dy, idx, in_shape)
