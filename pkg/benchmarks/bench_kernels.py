"""Compare the numba kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--size N] [--repeat R]

Times activation value+derivative maps over a float32 tensor shaped like the
first conv layer's output, and the 2x2 max-pool forward/backward pair.
"""

import argparse
import timeit

import numpy as np

from tslab import _accel
from tslab.activations import ActivationSpec, Hyperparams, Kind
from tslab.activations import _kernels, _vectorized
from tslab.nn import _pool

SPECS = [
    ActivationSpec.tanhsoft2(0.6, 1),
    ActivationSpec.tanhsoft1(0.87),
    ActivationSpec.family(Hyperparams(0.5, 0.3, 2.0, 1.0)),
    ActivationSpec(Kind.RELU),
    ActivationSpec(Kind.SWISH),
    ActivationSpec(Kind.ELU),
]


def _best(fn, repeat):
    return min(timeit.repeat(fn, number=1, repeat=repeat))


def bench_activation(spec, x, repeat):
    code, *p = spec.kernel_args()
    flat = x.ravel()
    out, dout = np.empty_like(flat), np.empty_like(flat)

    def numba_path():
        _kernels.value_deriv_array(code, *p, flat, out, dout)

    def numpy_path():
        _vectorized.value(code, *p, flat)
        _vectorized.deriv(code, *p, flat)

    numba_path()  # compile outside the timed region
    return _best(numba_path, repeat), _best(numpy_path, repeat)


def bench_pool(x, repeat):
    def run(use_numba):
        out, idx = _pool.maxpool_forward(x, use_numba=use_numba)
        _pool.maxpool_backward(out, idx, x.shape, use_numba=use_numba)

    run(True)
    return _best(lambda: run(True), repeat), _best(lambda: run(False), repeat)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--size", type=int, default=128, help="batch size (default 128)")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if not _accel.NUMBA_AVAILABLE:
        raise SystemExit("numba is not installed; nothing to compare")
    rng = np.random.default_rng(0)
    x = (rng.standard_normal((args.size, 32, 26, 26)) * 3).astype(np.float32)
    print(f"tensor {x.shape} float32, best of {args.repeat}")
    print(f"{'kernel':<28}{'numba ms':>10}{'numpy ms':>10}{'speedup':>9}")
    rows = [(str(s), *bench_activation(s, x, args.repeat)) for s in SPECS]
    rows.append(("maxpool2 fwd+bwd", *bench_pool(x, args.repeat)))
    for name, t_nb, t_np in rows:
        print(f"{name:<28}{t_nb * 1e3:>10.2f}{t_np * 1e3:>10.2f}{t_np / t_nb:>8.1f}x")


if __name__ == "__main__":
    main()
