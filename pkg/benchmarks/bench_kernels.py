"""Compare the numba kernels with their numpy fallbacks.

Per-kernel timings run in-process; the end-to-end timing runs a small Monte
Carlo count twice in subprocesses, once with WEGNERLAB_DISABLE_NUMBA=1.

    python3 benchmarks/bench_kernels.py [--repeat 5] [--size 64]
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from wegnerlab import NUMBA_ENABLED
from wegnerlab.density import DensitySpec
from wegnerlab.kernels import KERNELS

END_TO_END = """
import time
from wegnerlab.density import DensitySpec
from wegnerlab.symbol import ConvolutionVector
from wegnerlab.wegner import wegner_experiment
a = ConvolutionVector(1, {{0: 1, 1: -1}})
wegner_experiment(a, DensitySpec.uniform(), {l}, 1, 0.0, 0.1, 2, 0)  # warm up / compile
t = time.perf_counter()
wegner_experiment(a, DensitySpec.uniform(), {l}, 1, 0.0, 0.1, {samples}, 0)
print(time.perf_counter() - t)
"""


def kernel_inputs(n, rng):
    m = rng.normal(size=(n, n))
    m = np.ascontiguousarray(m + m.T)
    d, e = rng.normal(size=n), rng.normal(size=n - 1)
    l = int(round(n ** 0.5))
    offsets = np.array([[0, 0], [1, 0], [0, 1], [-1, 2]], dtype=np.int64)
    f = DensitySpec([(0.0, 0.5, [0.0, 4.0]), (0.5, 1.0, [4.0, -4.0])])
    return {
        "tridiagonalize": (m,),
        "tql_eigenvalues": (d, e),
        "periodic_potential": (rng.random(l * l), l, 2, offsets, rng.normal(size=4)),
        "bisect_quantiles": (rng.random(n * n), f._lo, f._hi, f._cdf_lo, f._anti, 64),
    }


def best_of(fn, args, repeat):
    fn(*args)  # compile outside the timing
    return min(timeit.repeat(lambda: fn(*args), number=1, repeat=repeat))


def end_to_end(disable, l, samples):
    env = dict(os.environ, WEGNERLAB_DISABLE_NUMBA="1" if disable else "")
    out = subprocess.run([sys.executable, "-c", END_TO_END.format(l=l, samples=samples)],
                         env=env, capture_output=True, text=True, check=True)
    return float(out.stdout.strip())


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--size", type=int, default=64, help="matrix order for the kernels")
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--l", type=int, default=32, help="chain length for the end-to-end run")
    p.add_argument("--samples", type=int, default=200)
    args = p.parse_args()

    if not NUMBA_ENABLED:
        print("numba disabled in this process: both columns time the numpy code")
    inputs = kernel_inputs(args.size, np.random.default_rng(0))
    print(f"{'kernel':<20}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for name, (nb, npy) in KERNELS.items():
        t_nb = best_of(nb, inputs[name], args.repeat)
        t_np = best_of(npy, inputs[name], args.repeat)
        print(f"{name:<20}{1e3 * t_nb:>12.3f}{1e3 * t_np:>12.3f}{t_np / t_nb:>10.1f}")

    t_nb = end_to_end(False, args.l, args.samples)
    t_np = end_to_end(True, args.l, args.samples)
    print(f"\nwegner_experiment l={args.l}, {args.samples} samples: "
          f"numba {t_nb:.3f}s, numpy {t_np:.3f}s, speedup {t_np / t_nb:.1f}")


if __name__ == "__main__":
    main()
