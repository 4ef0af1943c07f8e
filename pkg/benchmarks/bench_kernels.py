"""Time the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py [--repeat 5]
"""

import argparse
import timeit

import numpy as np

from fairclass import _kernels_py as py

try:
    from fairclass import _kernels as cy
except ImportError:  # extension not built
    cy = None


def cases(rng):
    n, M = 60, 600
    Z = rng.standard_normal((n, M))
    Z /= np.linalg.norm(Z, axis=0)
    C = rng.standard_normal((400, 4500)) * 0.01
    y = np.repeat([1, 2], 200)
    x = rng.standard_normal(100_000)
    return {
        f"lambda_max_path n={n} M={M}": lambda mod: mod.lambda_max_path(Z),
        "nested_error_counts 400x4500": lambda mod: mod.nested_error_counts(C, y),
        "compensated_cumsum 1e5": lambda mod: mod.compensated_cumsum(x),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    rng = np.random.default_rng(0)
    print(f"{'kernel':34s} {'python [s]':>11s} {'compiled [s]':>13s} {'speedup':>8s}")
    for name, fn in cases(rng).items():
        t_py = min(timeit.repeat(lambda: fn(py), number=1, repeat=args.repeat))
        if cy is None:
            print(f"{name:34s} {t_py:11.4f} {'n/a':>13s} {'':>8s}")
            continue
        t_cy = min(timeit.repeat(lambda: fn(cy), number=1, repeat=args.repeat))
        print(f"{name:34s} {t_py:11.4f} {t_cy:13.4f} {t_py / t_cy:7.1f}x")


if __name__ == "__main__":
    main()
