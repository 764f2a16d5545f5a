"""Backend switch for the hot kernels.

Set ``TSLAB_DISABLE_NUMBA=1`` before import to run every kernel through the
vectorized numpy path. When numba is missing the numpy path is used as well.
"""

import os

_FALSY = {"", "0", "false", "no", "off"}


def _numba_requested() -> bool:
    return os.environ.get("TSLAB_DISABLE_NUMBA", "").strip().lower() in _FALSY


try:
    import numba as _numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    _numba = None

NUMBA_AVAILABLE = _numba is not None
NUMBA_ENABLED = NUMBA_AVAILABLE and _numba_requested()


def njit(fn):
    """Compile ``fn`` in nopython mode when numba is importable.

    Kernels are always decorated; whether the compiled or the numpy path is
    *dispatched to* is decided by ``NUMBA_ENABLED`` in the callers.
    """
    if _numba is None:
        return fn
    return _numba.njit(cache=True, nogil=True)(fn)


def backend_name() -> str:
    return "numba" if NUMBA_ENABLED else "numpy"
