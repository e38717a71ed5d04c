#!/usr/bin/env python3
"""Benchmark the two hot kernels against their pure-numpy fallbacks.

Run from the repository root:

    python3 benchmarks/bench_kernels.py [--size 512] [--repeats 5]

Both backends produce bitwise-identical output (asserted here); the numbers
show what the compiled path buys on this machine.  `disc_blur` is where the
compiled kernel matters: its cost grows with blur radius and resists
vectorization because every output pixel averages a different-sized disc.
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from akira_kit import HAVE_NUMBA, bilinear_sample, disc_blur


def timeit(fn, repeats: int) -> float:
    fn()  # warm-up: triggers JIT compilation on the numba path
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_bilinear(size: int, repeats: int) -> None:
    rng = np.random.default_rng(0)
    img = rng.random((size, size, 3))
    coords = np.stack(
        [rng.uniform(0, size - 1, (size, size)), rng.uniform(0, size - 1, (size, size))],
        axis=-1,
    )
    rows = {}
    for backend in ("numpy", "numba") if HAVE_NUMBA else ("numpy",):
        rows[backend] = timeit(lambda: bilinear_sample(img, coords, backend=backend), repeats)
    if HAVE_NUMBA:
        assert np.array_equal(
            bilinear_sample(img, coords, backend="numpy"),
            bilinear_sample(img, coords, backend="numba"),
        ), "backends diverged"
    report("bilinear_sample", size, rows)


def bench_disc_blur(size: int, repeats: int) -> None:
    rng = np.random.default_rng(1)
    img = rng.random((size, size, 3))
    radius = rng.uniform(0.0, 6.0, (size, size))
    rows = {}
    for backend in ("numpy", "numba") if HAVE_NUMBA else ("numpy",):
        rows[backend] = timeit(lambda: disc_blur(img, radius, backend=backend), repeats)
    if HAVE_NUMBA:
        assert np.array_equal(
            disc_blur(img, radius, backend="numpy"),
            disc_blur(img, radius, backend="numba"),
        ), "backends diverged"
    report("disc_blur (radius 0-6 px)", size, rows)


def report(name: str, size: int, rows: dict[str, float]) -> None:
    print(f"\n{name} @ {size}x{size}x3")
    for backend, secs in rows.items():
        print(f"  {backend:<6} {secs * 1e3:9.2f} ms")
    if "numba" in rows:
        print(f"  speedup {rows['numpy'] / rows['numba']:.1f}x")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--size", type=int, default=512, help="square image edge (default 512)")
    parser.add_argument("--repeats", type=int, default=5, help="timed repeats, best-of (default 5)")
    args = parser.parse_args()
    if not HAVE_NUMBA:
        print("numba unavailable or disabled (AKIRA_KIT_NO_NUMBA); timing numpy only")
    bench_bilinear(args.size, args.repeats)
    bench_disc_blur(args.size, args.repeats)


if __name__ == "__main__":
    main()
