#!/usr/bin/env python3
"""Benchmark the swept-occupancy kernel: jitted loops vs numpy fallback.

The conflict oracle rasterises every moving vehicle's swept footprint
onto the zone grid; this is the hot loop when labelling thousands of
scenarios. Both implementations share exact semantics (asserted here
before timing), so the only question is speed.

Run:

    python3 benchmarks/bench_kernels.py
    python3 benchmarks/bench_kernels.py --vehicles 200 --repeats 7

The jitted path needs numba importable and CONFLICTLAB_NUMBA unset (or
truthy); without it the script still runs and reports the numpy path
against itself, flagged accordingly.
"""

from __future__ import annotations

import argparse
import statistics
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parent.parent / "src"))

from conflictlab.sim.kernels import (  # noqa: E402
    swept_occupancy,
    swept_occupancy_numpy,
    using_numba,
)


def synthetic_workload(n_vehicles: int, n_samples: int, seed: int = 0):
    """Vehicle-like trajectory batches crossing a 30 m zone (60×60 grid)."""
    rng = np.random.default_rng(seed)
    batches = []
    for _ in range(n_vehicles):
        x0, y0 = rng.uniform(-40.0, 10.0, size=2)
        heading = rng.uniform(0.0, 2.0 * np.pi)
        speed = rng.uniform(4.0, 14.0)
        t = np.linspace(0.0, 6.0, n_samples)
        xs = x0 + speed * t * np.cos(heading)
        ys = y0 + speed * t * np.sin(heading)
        headings = np.full(n_samples, heading)
        half_len = rng.uniform(0.9, 6.0)
        half_wid = rng.uniform(0.3, 1.3)
        batches.append((xs, ys, headings, half_len, half_wid))
    return batches


def run_all(kernel, batches, zone_half: float, cell: float) -> int:
    covered = 0
    for xs, ys, headings, half_len, half_wid in batches:
        covered += int(kernel(xs, ys, headings, half_len, half_wid, zone_half, cell).sum())
    return covered


def time_kernel(kernel, batches, zone_half, cell, repeats: int) -> list[float]:
    samples = []
    for _ in range(repeats):
        start = time.perf_counter()
        run_all(kernel, batches, zone_half, cell)
        samples.append(time.perf_counter() - start)
    return samples


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--vehicles", type=int, default=400,
                        help="trajectory batches per timed pass")
    parser.add_argument("--samples", type=int, default=61,
                        help="trajectory samples per batch (horizon 6 s / dt 0.1)")
    parser.add_argument("--repeats", type=int, default=5,
                        help="timed passes per implementation")
    parser.add_argument("--zone-half", type=float, default=15.0)
    parser.add_argument("--cell", type=float, default=0.5)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    batches = synthetic_workload(args.vehicles, args.samples, args.seed)

    # Correctness first: both paths must agree bit for bit on every batch.
    for xs, ys, headings, half_len, half_wid in batches:
        a = swept_occupancy(xs, ys, headings, half_len, half_wid,
                            args.zone_half, args.cell)
        b = swept_occupancy_numpy(xs, ys, headings, half_len, half_wid,
                                  args.zone_half, args.cell)
        if not np.array_equal(a, b):
            print("FATAL: kernel outputs disagree", file=sys.stderr)
            return 1

    if using_numba():
        # Absorb the one-off JIT compile outside the timed region.
        run_all(swept_occupancy, batches[:1], args.zone_half, args.cell)
        active_label = "numba @njit"
    else:
        active_label = "numpy (numba unavailable or disabled)"

    jit_times = time_kernel(swept_occupancy, batches, args.zone_half,
                            args.cell, args.repeats)
    np_times = time_kernel(swept_occupancy_numpy, batches, args.zone_half,
                           args.cell, args.repeats)

    jit_med = statistics.median(jit_times)
    np_med = statistics.median(np_times)
    per_call = args.vehicles

    print(f"workload : {args.vehicles} vehicles x {args.samples} samples, "
          f"{int(round(2 * args.zone_half / args.cell))}^2 grid")
    print(f"active   : {active_label}")
    print(f"{'path':<18}{'median':>12}{'min':>12}{'per call':>14}")
    print(f"{'active kernel':<18}{jit_med * 1e3:>10.2f}ms"
          f"{min(jit_times) * 1e3:>10.2f}ms{jit_med / per_call * 1e6:>12.1f}us")
    print(f"{'numpy fallback':<18}{np_med * 1e3:>10.2f}ms"
          f"{min(np_times) * 1e3:>10.2f}ms{np_med / per_call * 1e6:>12.1f}us")
    if using_numba():
        print(f"speedup  : numpy/jit = {np_med / jit_med:.1f}x")
    return 0


if __name__ == "__main__":
    sys.exit(main())
