"""Benchmark the AR(1) recursion kernel: compiled extension vs numpy.

The recursion z_{m+1} = step @ z_m + noise_map @ shocks_m is the only
sequential hot loop in the package (exact and Euler samplers both reduce
to it). This script times both backends on identical inputs and reports
steps per second.

Usage:
    python benchmarks/bench_recursion.py [--steps 1000000] [--dim 3]
        [--shock-dim 3] [--repeat 5]
"""

import argparse
import time

import numpy as np

from carkov._kernels import BACKEND
from carkov._kernels._recursion_py import ar1_recursion as recursion_python

try:
    from carkov._kernels._recursion import ar1_recursion as recursion_compiled
except ImportError:
    recursion_compiled = None


def _time_one(fn, args, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--steps", type=int, default=1_000_000)
    parser.add_argument("--dim", type=int, default=3)
    parser.add_argument("--shock-dim", type=int, default=3)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    rng = np.random.default_rng(0)
    step = np.eye(args.dim) * 0.95 + rng.standard_normal((args.dim, args.dim)) * 0.01
    noise_map = rng.standard_normal((args.dim, args.shock_dim)) * 0.1
    z0 = rng.standard_normal(args.dim)
    shocks = rng.standard_normal((args.steps, args.shock_dim))
    case = (step, noise_map, z0, shocks)

    print(f"active backend: {BACKEND}")
    print(f"{args.steps} steps, state dim {args.dim}, "
          f"shock dim {args.shock_dim}, best of {args.repeat}")

    t_py = _time_one(recursion_python, case, args.repeat)
    print(f"python   {t_py * 1e3:9.1f} ms   {args.steps / t_py:12.3e} steps/s")

    if recursion_compiled is None:
        print("compiled extension not built (CARKOV_NO_EXT or no Cython); "
              "only the fallback was timed")
        return 0

    t_c = _time_one(recursion_compiled, case, args.repeat)
    print(f"compiled {t_c * 1e3:9.1f} ms   {args.steps / t_c:12.3e} steps/s")
    print(f"speedup  {t_py / t_c:9.2f}x")

    out_py = recursion_python(*case)
    out_c = recursion_compiled(*case)
    gap = float(np.abs(out_py - out_c).max())
    print(f"max |python - compiled| over the whole path: {gap:.3e}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
