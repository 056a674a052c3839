#!/usr/bin/env python3
"""Time the double-null march on both backends and print the speedup.

The march kernels carry a compiled fast path and a pure-numpy fallback,
selected per call (``backend=``) or globally via ``NULLWAVE_NUMBA=0``.
This script runs the same membrane pulse through both paths on a few
grids and reports best-of-N wall times.

Usage::

    python3 benchmarks/bench_march.py [--radius 20] [--h 0.1 0.05 0.025]
                                      [--eps 1e-3] [--repeat 3]
"""

from __future__ import annotations

import argparse
from time import perf_counter

from nullwave.background import bump_profile
from nullwave.data_gauge import build_diagonal_data, perturbed_data
from nullwave.dn_core import march, pick_backend
from nullwave.grid import DNGrid
from nullwave.nonlinearity import membrane_model


def best_of(n: int, fn) -> float:
    best = float("inf")
    for _ in range(n):
        t0 = perf_counter()
        fn()
        best = min(best, perf_counter() - t0)
    return best


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--radius", type=float, default=20.0)
    ap.add_argument("--h", type=float, nargs="+", default=[0.1, 0.05, 0.025])
    ap.add_argument("--eps", type=float, default=1e-3)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)

    model = membrane_model()
    profile = bump_profile(0.3, width=6.0)
    rect = perturbed_data(profile, eps=args.eps, center=0.5, width=1.2)

    backends = []
    for name in ("numba", "numpy"):
        if pick_backend(model, name) == name:
            backends.append(name)
    if backends != ["numba", "numpy"]:
        print("note: compiled path unavailable, timing pure numpy only")

    print(f"double-null march, radius {args.radius:g}, eps {args.eps:g}, "
          f"best of {args.repeat}")
    header = f"{'h':>8} {'nodes':>12}" + "".join(
        f" {b + ' [s]':>12}" for b in backends)
    if len(backends) == 2:
        header += f" {'speedup':>9}"
    print(header)

    for h in args.h:
        grid = DNGrid.square(args.radius, h)
        data, _ = build_diagonal_data(rect, grid, model, profile)
        times = {}
        for b in backends:
            march(data, grid, model, profile, backend=b)  # warm-up / JIT
            times[b] = best_of(args.repeat,
                               lambda b=b: march(data, grid, model, profile,
                                                 backend=b))
        row = f"{h:>8g} {(grid.N + 1) ** 2:>12,}" + "".join(
            f" {times[b]:>12.4f}" for b in backends)
        if len(backends) == 2:
            row += f" {times['numpy'] / times['numba']:>8.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
