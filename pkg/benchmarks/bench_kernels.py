"""Compare the compiled and numpy kernels on batched pair expectations.

    python benchmarks/bench_kernels.py [--nmax 12] [--batch 64] [--repeat 5]

Prints one row per particle count with the best-of-``repeat`` wall time
of each backend, the speedup, and the largest disagreement between them.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from quadbell import kernels
from quadbell.operators import pair_expectations
from quadbell.tensor import random_unit_vectors


def _states(n: int, batch: int, rng) -> np.ndarray:
    psi = rng.normal(size=(batch, 2**n)) + 1j * rng.normal(size=(batch, 2**n))
    return psi / np.linalg.norm(psi, axis=1, keepdims=True)


def _best_time(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--nmin", type=int, default=3)
    ap.add_argument("--nmax", type=int, default=12)
    ap.add_argument("--batch", type=int, default=64, help="states per call (shrunk for large n)")
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    if kernels.BACKEND != "cython":
        print("compiled kernels unavailable; only the numpy backend can be timed")
    rng = np.random.default_rng(args.seed)
    print(f"{'n':>3} {'batch':>6} {'numpy [ms]':>11} {'cython [ms]':>12} {'speedup':>8} {'max |diff|':>11}")
    for n in range(args.nmin, args.nmax + 1):
        batch = max(1, min(args.batch, 2 ** (20 - n)))
        psi = _states(n, batch, rng)
        vecs = random_unit_vectors((batch, n, 2), rng)
        timings, results = {}, {}
        for backend in ("numpy", "cython"):
            if backend == "cython" and kernels.BACKEND != "cython":
                continue
            run = lambda: pair_expectations("S", vecs, psi, "pure", backend=backend)  # noqa: E731
            results[backend] = run()
            timings[backend] = _best_time(run, args.repeat)
        t_np = timings["numpy"] * 1e3
        if "cython" in timings:
            t_cy = timings["cython"] * 1e3
            diff = float(np.max(np.abs(results["numpy"] - results["cython"])))
            print(f"{n:>3} {batch:>6} {t_np:>11.3f} {t_cy:>12.3f} {t_np / t_cy:>8.2f} {diff:>11.2e}")
        else:
            print(f"{n:>3} {batch:>6} {t_np:>11.3f} {'-':>12} {'-':>8} {'-':>11}")


if __name__ == "__main__":
    main()
