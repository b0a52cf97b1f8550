"""Compare the numba and numpy kernel backends on KTU- and RBO-sized inputs.

    python3 benchmarks/bench_kernels.py --sizes 100 1000 10000 --repeat 5
"""

import argparse
import os
import statistics
import time

import numpy as np

from primadkit import kernels
from primadkit.measures import kendalls_tau_union, rank_biased_overlap


def best_of(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def bench(size: int, repeat: int, backend: str) -> dict:
    os.environ["PRIMADKIT_BACKEND"] = backend
    kernels.warmup()
    rng = np.random.default_rng(size)
    perm = rng.permutation(size)
    ids_a = rng.permutation(2 * size)[:size]
    ids_b = rng.permutation(2 * size)[:size]
    docs_a = [f"d{i}" for i in ids_a]
    docs_b = [f"d{i}" for i in ids_b]
    return {
        "inversions": best_of(lambda: kernels.count_inversions(perm), repeat),
        "overlaps": best_of(lambda: kernels.prefix_overlaps(ids_a, ids_b, 2 * size), repeat),
        "ktu": best_of(lambda: kendalls_tau_union(docs_a, docs_b, depth=size), repeat),
        "rbo": best_of(lambda: rank_biased_overlap(docs_a, docs_b), repeat),
    }


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--sizes", type=int, nargs="+", default=[100, 1000, 5000])
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args(argv)

    if kernels._numba_kernels() is None:
        print("numba is not installed; only the numpy backend can run")
        return 1
    print(f"{'size':>7} {'kernel':<11} {'numba ms':>10} {'numpy ms':>10} {'speedup':>8}")
    speedups = []
    for size in args.sizes:
        fast = bench(size, args.repeat, "numba")
        slow = bench(size, args.repeat, "numpy")
        for name in fast:
            ratio = slow[name] / fast[name] if fast[name] > 0 else float("inf")
            speedups.append(ratio)
            print(f"{size:>7} {name:<11} {fast[name] * 1e3:>10.3f} {slow[name] * 1e3:>10.3f} {ratio:>7.1f}x")
    print(f"median speedup {statistics.median(speedups):.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
