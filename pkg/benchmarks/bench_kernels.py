"""Compare the compiled and numpy kernel-assembly backends.

Usage: python benchmarks/bench_kernels.py [--moduli 29 53 61] [--repeats 5]

For each task size it builds the train/train kernel of a fixed-point
partition (the hot call in every RFM iteration) with both backends, checks
they agree, and prints the median wall time of each.
"""

import argparse
import statistics
import time

import numpy as np

from symrfm import _backend
from symrfm.partitions import partition_fixed_points
from symrfm.rfm import one_hot_pairs
from symrfm.tasks import Task, build_dataset


def timed(fn, repeats):
    times = []
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--moduli", type=int, nargs="+", default=[29, 53, 61])
    ap.add_argument("--repeats", type=int, default=5)
    args = ap.parse_args(argv)

    backends = [("numpy", _backend.python_kernels)]
    if _backend.compiled_kernels is not None:
        backends.append(("cython", _backend.compiled_kernels))
    else:
        print("compiled backend not built; timing numpy only")

    rng = np.random.default_rng(0)
    print(f"{'p':>4} {'rows':>6} {'kernel':<10} " + " ".join(f"{n:>10}" for n, _ in backends) + "   speedup")
    for p in args.moduli:
        ds = build_dataset(Task.modular("add", p))
        X = ds.X[partition_fixed_points(ds, "s").train]
        a, b = one_hot_pairs(X)
        A = rng.normal(size=(2 * p, 2 * p))
        M = np.ascontiguousarray(A @ A.T / (2 * p))
        for name, call in (
            ("gaussian", lambda k: k.pair_gaussian(M, a, b, a, b, 2.5)),
            ("quadratic", lambda k: k.pair_quadratic(M, a, b, a, b)),
        ):
            results = [timed(lambda: call(k), args.repeats) for _, k in backends]
            if len(results) == 2:
                np.testing.assert_allclose(results[0][1], results[1][1], rtol=1e-12, atol=1e-300)
            cols = " ".join(f"{t * 1e3:8.1f}ms" for t, _ in results)
            speed = f"{results[0][0] / results[1][0]:8.2f}x" if len(results) == 2 else ""
            print(f"{p:>4} {len(X):>6} {name:<10} {cols} {speed}")


if __name__ == "__main__":
    main()
