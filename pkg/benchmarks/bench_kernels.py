"""Time the compiled kernels against the pure-Python reference.

Usage: python3 benchmarks/bench_kernels.py [--repeat N] [--rays N]

Each kernel runs on the apartment fixture with the same inputs for both
backends; the table reports the best of N wall-clock timings and the speedup.
"""

import argparse
import math
import timeit

import numpy as np

from anavi import kernels, mapgen
from anavi.acoustics import AcousticConfig


def workloads(n_rays):
    grid = mapgen.apartment()
    cells = np.ascontiguousarray(grid.cells)
    reflect = np.ascontiguousarray(grid.materials.reflectivity_lut())
    cfg = AcousticConfig(n_rays=n_rays)
    hist = np.zeros(cfg.n_bins)
    angles = np.linspace(0, 2 * math.pi, 64, endpoint=False)
    ranges, codes = np.empty(64), np.empty(64, dtype=np.int_)
    rng = np.random.default_rng(0)
    free = [grid.center_of_index(i) for i in rng.choice(grid.free_cells, 400)]
    segs = list(zip(free[::2], free[1::2]))

    def trace(k):
        hist[:] = 0
        k.trace_reflections(cells, reflect, grid.cell_size, 2.125, 3.125, 8.375, 6.625, cfg.n_rays,
                            0.37, cfg.max_bounces, cfg.energy_floor, cfg.listener_radius,
                            cfg.sound_speed, cfg.bin_width, hist)

    def scan(k):
        k.first_hits(cells, grid.cell_size, 2.125, 3.125, angles, 10.0, ranges, codes)

    def segments(k):
        for a, b in segs:
            k.segment_clear(cells, grid.cell_size, a.x, a.y, b.x, b.y)

    return {f"trace_reflections ({n_rays} rays)": trace, "first_hits (64 rays)": scan,
            "segment_clear (200 segments)": segments}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--rays", type=int, default=4096)
    args = ap.parse_args(argv)
    try:
        compiled = kernels.get_backend("cython")
    except ImportError:
        raise SystemExit("compiled kernels are not built; run `pip install -e .` first")
    python = kernels.get_backend("python")
    print(f"{'kernel':34s} {'python s':>10s} {'cython s':>10s} {'speedup':>8s}")
    for name, fn in workloads(args.rays).items():
        t_py = min(timeit.repeat(lambda: fn(python), number=1, repeat=args.repeat))
        t_cy = min(timeit.repeat(lambda: fn(compiled), number=1, repeat=args.repeat))
        print(f"{name:34s} {t_py:10.4f} {t_cy:10.4f} {t_py / t_cy:7.0f}x")


if __name__ == "__main__":
    main()
