"""Time the numba kernel lane against the pure-numpy one.

Runs every kernel on identical inputs under both lanes, checks the outputs
still agree bitwise, and prints best-of-N wall times plus one end-to-end
split-step row.  Usage::

    python3 benchmarks/bench_kernels.py [--sizes 4096,65536,1048576]
                                        [--repeats 7] [--steps 200]
"""

import argparse
import time

import numpy as np

import bornlab as bl
from bornlab import kernels


def _best_of(fn, repeats):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter_ns()
        fn()
        best = min(best, time.perf_counter_ns() - t0)
    return best / 1e3  # microseconds


def _kernel_cases(rng, n):
    x = rng.standard_normal(n)
    z = (rng.standard_normal(n) + 1j * rng.standard_normal(n)).astype(np.complex128)
    phase = np.exp(1j * rng.standard_normal(n))
    cdf = kernels.running_sum(np.abs(x))
    cdf = cdf / cdf[-1]
    u = rng.random(n // 4)
    return {
        "pairwise_sum": lambda: kernels.pairwise_sum(x),
        "pairwise_sum_complex": lambda: kernels.pairwise_sum_complex(z),
        "abs2": lambda: kernels.abs2(z),
        "phase_multiply": lambda: kernels.phase_multiply(z.copy(), phase),
        "running_sum": lambda: kernels.running_sum(np.abs(x)),
        "find_cells": lambda: kernels.find_cells(cdf, u),
    }


def _split_step_case(steps):
    model = bl.free_model()
    grid = bl.make_grid([(-32.0, 32.0)], [1024])
    packet = bl.gaussian_packet(0.0, 2.0, 1.0, model, grid=grid)
    return lambda: bl.split_step(packet, model, 1e-3, steps)


def _check_agreement(rng, n=4096):
    x = rng.standard_normal(n)
    z = (rng.standard_normal(n) + 1j * rng.standard_normal(n)).astype(np.complex128)
    phase = np.exp(1j * rng.standard_normal(n))
    cdf = np.sort(rng.random(64))
    u = rng.random(256)
    results = {}
    for lane in ("numba", "numpy"):
        kernels.use_backend(lane)
        zz = z.copy()
        kernels.phase_multiply(zz, phase)
        results[lane] = (kernels.pairwise_sum(x),
                         kernels.pairwise_sum_complex(z),
                         kernels.abs2(z).tobytes(), zz.tobytes(),
                         kernels.running_sum(x).tobytes(),
                         kernels.find_cells(cdf, u).tobytes())
    if results["numba"] != results["numpy"]:
        raise SystemExit("lane outputs disagree; benchmark aborted")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", default="4096,65536,1048576")
    ap.add_argument("--repeats", type=int, default=7)
    ap.add_argument("--steps", type=int, default=200,
                    help="split-step count for the end-to-end row")
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    if kernels.backend() != "numba":
        raise SystemExit("numba lane inactive (BORNLAB_NO_NUMBA set, or "
                         "import failed); nothing to compare")
    sizes = [int(s) for s in args.sizes.split(",")]
    rng = np.random.default_rng(args.seed)
    _check_agreement(rng)

    print(f"{'kernel':22s} {'n':>9s} {'numba us':>12s} {'numpy us':>12s} "
          f"{'speedup':>8s}")
    try:
        for n in sizes:
            cases = _kernel_cases(rng, n)
            for name, fn in cases.items():
                row = {}
                for lane in ("numba", "numpy"):
                    kernels.use_backend(lane)
                    fn()  # warm (JIT and page-in) before timing
                    row[lane] = _best_of(fn, args.repeats)
                print(f"{name:22s} {n:9d} {row['numba']:12.1f} "
                      f"{row['numpy']:12.1f} {row['numpy'] / row['numba']:7.2f}x")

        fn = _split_step_case(args.steps)
        row = {}
        for lane in ("numba", "numpy"):
            kernels.use_backend(lane)
            fn()
            row[lane] = _best_of(fn, max(3, args.repeats // 2))
        print(f"{'split_step(1024 pts)':22s} {args.steps:9d} "
              f"{row['numba']:12.1f} {row['numpy']:12.1f} "
              f"{row['numpy'] / row['numba']:7.2f}x")
    finally:
        kernels.use_backend("numba")


if __name__ == "__main__":
    main()
