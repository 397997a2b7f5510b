#!/usr/bin/env python3
"""Benchmark the numba and numpy block-energy kernels side by side.

Usage: python benchmarks/bench_kernels.py [--width 3840 --height 2160
--frames 8]. The numba timing excludes the first (compilation) call.
"""

import argparse
import time

import numpy as np

from rdgauge import kernels


def bench(fn, plane, reps):
    start = time.perf_counter()
    for _ in range(reps):
        fn(plane)
    return (time.perf_counter() - start) / reps


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--width", type=int, default=3840)
    parser.add_argument("--height", type=int, default=2160)
    parser.add_argument("--frames", type=int, default=8)
    args = parser.parse_args()

    pad_h = (-args.height) % kernels.BLOCK
    pad_w = (-args.width) % kernels.BLOCK
    rng = np.random.default_rng(7)
    plane = rng.uniform(0, 1023, (args.height + pad_h, args.width + pad_w))

    print(f"plane {plane.shape[1]}x{plane.shape[0]}, {args.frames} reps")

    t_np = bench(kernels.block_energies_numpy, plane, args.frames)
    print(f"numpy : {t_np * 1000:8.2f} ms/frame")

    if kernels.HAVE_NUMBA:
        kernels.block_energies_numba(plane)  # compile
        t_nb = bench(kernels.block_energies_numba, plane, args.frames)
        print(f"numba : {t_nb * 1000:8.2f} ms/frame  ({t_np / t_nb:.2f}x vs numpy)")
        diff = np.abs(kernels.block_energies_numba(plane)
                      - kernels.block_energies_numpy(plane)).max()
        print(f"max |numba - numpy| = {diff:.3e}")
    else:
        print("numba : not installed (RDGAUGE_KERNEL=numpy path only)")


if __name__ == "__main__":
    main()
