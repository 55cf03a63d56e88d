"""Time the pure-Python and compiled coordinate-ascent backends on the same scans.

Usage: python benchmarks/bench_scan.py [--rows N] [--features M] [--bins K] [--repeat R]
"""
from __future__ import annotations

import argparse
import time

import numpy as np

from mpego import _kernels
from mpego.dataset import FeatureTable, merge_label
from mpego.discretize import fit_bins
from mpego.gfa import ScanParams, build_cube, scan_cube


def make_pool(rows: int, features: int, seed: int):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(rows, features))
    logit = 0.8 * (x[:, 0] > 0.5) + 0.5 * (x[:, 1] < -0.3)
    y = rng.random(rows) < 1 / (1 + np.exp(-logit))
    kinds = {f"x{i}": "continuous" for i in range(features)}

    def table(mask, source):
        return FeatureTable.from_columns({f"x{i}": x[mask, i] for i in range(features)}, kinds, source)

    return merge_label(table(y, "model"), table(~y, "train"))


def bench(cube, backend: str, restarts: int, repeat: int) -> tuple[float, float]:
    params = ScanParams(backend=backend)
    times, score = [], None
    for r in range(repeat):
        t0 = time.perf_counter()
        score, _ = scan_cube(cube, "over", restarts, seed=r, params=params)
        times.append(time.perf_counter() - t0)
    return min(times), score


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--rows", type=int, default=20_000)
    ap.add_argument("--features", type=int, default=6)
    ap.add_argument("--bins", type=int, default=5)
    ap.add_argument("--restarts", type=int, default=10)
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    pool = make_pool(args.rows, args.features, seed=0)
    cube = build_cube(pool, fit_bins(pool, k=args.bins))
    print(f"rows={args.rows} features={args.features} bins={args.bins} cells={len(cube.codes)} "
          f"restarts={args.restarts}")
    t_py, s_py = bench(cube, "python", args.restarts, args.repeat)
    print(f"python : {t_py * 1e3:9.2f} ms per scan  (score {s_py:.6f})")
    if _kernels.compiled is None:
        print("cython : extension not built")
        return
    t_cy, s_cy = bench(cube, "cython", args.restarts, args.repeat)
    print(f"cython : {t_cy * 1e3:9.2f} ms per scan  (score {s_cy:.6f})")
    print(f"speedup: {t_py / t_cy:.1f}x, identical scores: {s_py == s_cy}")


if __name__ == "__main__":
    main()
