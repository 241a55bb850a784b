"""Hull speed report: reduction and threading against the naive baseline.

Times the exact single-thread hull of the raw cloud against the
reduced-then-hulled pipeline, and the compiled kernels against the numpy
fallback. Nothing is asserted; the numbers go in the README.
"""

from __future__ import annotations

import argparse
import importlib
import os
import time

import numpy as np

from .hull import COMPILED, get_backend, quickhull, reduce
from .hull import core as _core

# the package re-exports the quickhull *function*, so fetch the module itself
_quickhull_mod = importlib.import_module("hullplan.hull.quickhull")


def _best_of(fn, repeat: int) -> tuple[float, object]:
    best, result = float("inf"), None
    for _ in range(repeat):
        start = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - start)
    return best, result


def _with_kernels(backend, fn):
    saved = _core.kernels, _quickhull_mod.kernels
    _core.kernels = _quickhull_mod.kernels = backend
    try:
        return fn()
    finally:
        _core.kernels, _quickhull_mod.kernels = saved


def run(n_points: int, cell_size: float | None, seed: int, repeat: int) -> dict:
    rng = np.random.default_rng(seed)
    pts = rng.uniform(-1.0, 1.0, (n_points, 3))
    if cell_size is None:
        # span/16 keeps the grid well under the point count for volume
        # clouds; finer cells tighten the bound but erase the win
        cell_size = float((pts.max(axis=0) - pts.min(axis=0)).max()) / 16.0
    workers = os.cpu_count() or 1

    t_naive, naive = _best_of(lambda: quickhull(pts, workers=1), repeat)

    def reduced_hull(n_workers):
        _, kept = reduce(pts, cell_size)
        return kept, quickhull(kept, workers=n_workers)

    t_red1, (kept, red_hull) = _best_of(lambda: reduced_hull(1), repeat)
    t_redp, _ = _best_of(lambda: reduced_hull(workers), repeat)

    t_compiled = t_numpy = None
    if COMPILED:
        t_compiled, h_c = _with_kernels(
            get_backend("compiled"),
            lambda: _best_of(lambda: reduced_hull(1), repeat))
        t_numpy, h_py = _with_kernels(
            get_backend("python"),
            lambda: _best_of(lambda: reduced_hull(1), repeat))
        assert np.array_equal(h_c[1].vertices, h_py[1].vertices), \
            "backends disagree on the reduced hull"

    under = red_hull.max_plane_excess(pts)
    return {
        "points": n_points,
        "cell_size": cell_size,
        "workers": workers,
        "naive_s": t_naive,
        "naive_vertices": len(naive.vertices),
        "reduced_s": t_red1,
        "reduced_parallel_s": t_redp,
        "reduced_kept": len(kept),
        "reduced_vertices": len(red_hull.vertices),
        "under_coverage": under,
        "speedup": t_naive / t_redp,
        "compiled_s": t_compiled,
        "numpy_s": t_numpy,
    }


def report(stats: dict) -> str:
    lines = [
        f"points {stats['points']}, cell {stats['cell_size']:.4f}, "
        f"{stats['workers']} worker(s)",
        f"naive single-thread hull      {stats['naive_s']:8.3f} s   "
        f"({stats['naive_vertices']} vertices)",
        f"reduced hull, single thread   {stats['reduced_s']:8.3f} s   "
        f"({stats['reduced_kept']} kept, {stats['reduced_vertices']} vertices)",
        f"reduced + parallel hull       {stats['reduced_parallel_s']:8.3f} s",
        f"speedup over naive            {stats['speedup']:8.1f} x",
        f"max under-coverage            {stats['under_coverage']:.2e} "
        f"(bound {stats['cell_size'] * np.sqrt(3):.2e})",
    ]
    if stats["compiled_s"] is not None:
        lines.append(
            f"kernels, reduced pipeline     compiled {stats['compiled_s']:.3f} s, "
            f"numpy {stats['numpy_s']:.3f} s, "
            f"ratio {stats['numpy_s'] / stats['compiled_s']:.1f} x")
    else:
        lines.append("compiled kernels unavailable; numpy fallback only")
    return "\n".join(lines)


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--points", type=int, default=1_000_000)
    parser.add_argument("--cell-size", type=float, default=None)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--repeat", type=int, default=1)
    args = parser.parse_args(argv)
    print(report(run(args.points, args.cell_size, args.seed, args.repeat)))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
