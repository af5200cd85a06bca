"""Time the compiled mesh kernels against the pure-Python fallback.

Usage: python benchmarks/bench_kernels.py [--cells 200 800] [--repeat 3]

Each back end meshes the same seeds; the script checks that the cells are
bitwise identical and reports the best wall time of ``--repeat`` runs.
"""
import argparse
import time
from contextlib import contextmanager

import numpy as np
from scipy.spatial import cKDTree

from trefftz_poly import _pykernels, kernels
from trefftz_poly.geometry import QuarterAnnulus, Rectangle, random_seeds, voronoi_cells


@contextmanager
def backend(impl):
    saved = kernels.clip_cells, kernels.polygon_moments
    kernels.clip_cells, kernels.polygon_moments = impl.clip_cells, impl.polygon_moments
    try:
        yield
    finally:
        kernels.clip_cells, kernels.polygon_moments = saved


def best_time(fn, repeat):
    best = np.inf
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--cells", type=int, nargs="+", default=[200, 800])
    p.add_argument("--repeat", type=int, default=3)
    args = p.parse_args(argv)
    if not kernels.COMPILED:
        print("compiled extension not available; only the fallback can be timed")
    from trefftz_poly import _ckernels  # noqa: F401  (fails loudly if not built)

    domains = {"rect:10x2": Rectangle(10.0, 2.0, 0.0, -1.0), "annulus:1,2": QuarterAnnulus(1.0, 2.0)}
    print(f"{'domain':<12} {'cells':>6} {'compiled [s]':>13} {'python [s]':>11} {'speed-up':>9}")
    for name, dom in domains.items():
        for n in args.cells:
            seeds = random_seeds(dom, n, seed=1)
            with backend(_ckernels):
                tc, mc = best_time(lambda: voronoi_cells(seeds, dom), args.repeat)
            with backend(_pykernels):
                tp, mp = best_time(lambda: voronoi_cells(seeds, dom), args.repeat)
            same = np.array_equal(mc.nodes, mp.nodes) and all(
                np.array_equal(a, b) for a, b in zip(mc.cells, mp.cells))
            print(f"{name:<12} {n:>6} {tc:>13.4f} {tp:>11.4f} {tp / tc:>8.1f}x"
                  + ("" if same else "  MISMATCH"))

    print("\nkernel only (clip_cells, 24 neighbours, all seeds)")
    print(f"{'domain':<12} {'cells':>6} {'compiled [s]':>13} {'python [s]':>11} {'speed-up':>9}")
    for name, dom in domains.items():
        for n in args.cells:
            seeds = np.ascontiguousarray(random_seeds(dom, n, seed=1))
            k = min(24, n - 1)
            dist, idx = cKDTree(seeds).query(seeds, k + 1)
            dist = np.ascontiguousarray(dist[:, 1:])
            idx = np.ascontiguousarray(idx[:, 1:], dtype=np.int64)
            rows = np.arange(n, dtype=np.int64)
            box = np.ascontiguousarray(dom.box(), dtype=float)
            tc, rc = best_time(lambda: _ckernels.clip_cells(seeds, box, rows, idx, dist), args.repeat)
            tp, rp = best_time(lambda: _pykernels.clip_cells(seeds, box, rows, idx, dist), args.repeat)
            same = all(np.array_equal(a, b) for a, b in zip(rc, rp))
            print(f"{name:<12} {n:>6} {tc:>13.5f} {tp:>11.4f} {tp / tc:>8.1f}x"
                  + ("" if same else "  MISMATCH"))


if __name__ == "__main__":
    main()
