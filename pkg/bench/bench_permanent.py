"""Time the compiled Ryser permanent against the pure-Python fallback.

    python bench/bench_permanent.py [--sizes 4,6,8,10,12] [--repeat 5]

Prints one row per matrix size with the best-of-``repeat`` time of each
backend and the speed-up. Both implementations are imported directly, so
the environment switch that selects the runtime backend is irrelevant here.
"""

import argparse
import sys
import timeit

import numpy as np

from dicke_network import _kernels_py

try:
    from dicke_network import _kernels
except ImportError:
    _kernels = None


def best_time(fn, a, repeat):
    number = 1
    while timeit.timeit(lambda: fn(a), number=number) < 0.05:
        number *= 2
    return min(timeit.repeat(lambda: fn(a), number=number, repeat=repeat)) / number


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", default="4,6,8,10,12,14")
    parser.add_argument("--repeat", type=int, default=5)
    parser.add_argument("--seed", type=int, default=1)
    args = parser.parse_args(argv)
    if _kernels is None:
        print("compiled extension not built; run `pip install -e . --no-build-isolation` first", file=sys.stderr)
        return 1
    rng = np.random.default_rng(args.seed)
    print(f"{'n':>3} {'python [s]':>12} {'cython [s]':>12} {'speed-up':>9}  max |diff|")
    for n in (int(x) for x in args.sizes.split(",")):
        a = np.ascontiguousarray(rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n)))
        diff = abs(_kernels.ryser_permanent(a) - _kernels_py.ryser_permanent(a))
        t_py = best_time(_kernels_py.ryser_permanent, a, args.repeat)
        t_cy = best_time(_kernels.ryser_permanent, a, args.repeat)
        print(f"{n:>3} {t_py:>12.3e} {t_cy:>12.3e} {t_py / t_cy:>9.1f}  {diff:.1e}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
