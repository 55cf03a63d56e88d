import itertools
import math

import numpy as np
import pytest
from scipy.stats.contingency import odds_ratio as scipy_odds_ratio

from mpego import _ascent, _kernels
from mpego.dataset import FeatureTable, merge_label
from mpego.discretize import fit_bins
from mpego.gfa import (Cube, ScanParams, SubsetDescriptor, build_cube, empirical_p, odds_ratio_ci, random_start,
                       scan, scan_cube)
from mpego.scanstat import ScanError

from conftest import exhaustive_best, nonempty_subsets, oracle_score, planted_tables, random_pool

needs_ext = pytest.mark.skipif(_kernels.compiled is None, reason="compiled kernel not built")


def cube_of(codes, labels, n_strata):
    return Cube.build(codes, labels, n_strata, [f"f{i}" for i in range(len(n_strata))])


def test_oracle_equivalence_small_pools():
    rng = np.random.default_rng(2024)
    for _ in range(15):
        codes, labels, n_strata = random_pool(rng)
        if max(n_strata) < 2:
            continue
        for direction in ("over", "under"):
            score, _ = scan_cube(cube_of(codes, labels, n_strata), direction, restarts=10, seed=1)
            best = exhaustive_best(codes, labels, n_strata, direction == "over")
            assert score == pytest.approx(best, rel=1e-9, abs=1e-12)


def test_ltss_prefix_optimality_single_feature():
    rng = np.random.default_rng(7)
    for _ in range(200):
        C = int(rng.integers(2, 7))
        cell_n = rng.integers(1, 60, C).astype(np.int64)
        cell_y = np.array([rng.integers(0, n + 1) for n in cell_n], dtype=np.int64)
        if cell_y.sum() in (0, cell_n.sum()):
            continue
        e = cell_y.sum() / cell_n.sum()
        best = max(oracle_score(int(cell_n[list(s)].sum()), int(cell_y[list(s)].sum()), e, True)
                   for s in nonempty_subsets(C))
        codes = np.arange(C, dtype=np.int32).reshape(-1, 1)
        allowed = np.zeros((1, C), np.uint8)
        allowed[0, rng.integers(C)] = 1
        s, _ = _ascent.ascend(codes, cell_n, cell_y, np.array([C], np.int32), allowed, e, True,
                              1e-6, 1e6, 1)
        assert s == best


def test_monotone_sweep_trace():
    rng = np.random.default_rng(3)
    for _ in range(30):
        codes, labels, n_strata = random_pool(rng, 4, 4)
        if max(n_strata) < 2:
            continue
        cube = cube_of(codes, labels, n_strata)
        allowed = random_start(cube, rng)
        trace = []
        _ascent.ascend(cube.codes, cube.cell_n, cube.cell_y, cube.n_strata, allowed,
                       cube.n_generated / cube.n_rows, True, 1e-6, 1e6, 1, trace=trace)
        assert all(b >= a for a, b in itertools.pairwise(trace))


@needs_ext
def test_backend_parity():
    rng = np.random.default_rng(11)
    for _ in range(40):
        codes, labels, n_strata = random_pool(rng, 4, 5)
        if max(n_strata) < 2:
            continue
        cube = cube_of(codes, labels, n_strata)
        for direction in ("over", "under"):
            a = scan_cube(cube, direction, 5, 9, ScanParams(backend="python"))
            b = scan_cube(cube, direction, 5, 9, ScanParams(backend="cython"))
            assert a[0] == b[0]
            assert np.array_equal(a[1], b[1])


def test_restart_monotonicity():
    rng = np.random.default_rng(5)
    codes, labels, n_strata = random_pool(rng, 3, 3)
    cube = cube_of(codes, labels, n_strata)
    scores = [scan_cube(cube, "over", r, seed=4)[0] for r in range(1, 12)]
    assert all(b >= a for a, b in itertools.pairwise(scores))


def test_planted_recovery_determinism_and_invariants():
    gen, ref = planted_tables(0)
    pool = merge_label(gen, ref)
    bins = fit_bins(pool)
    r1 = scan(pool, bins, restarts=10, seed=17)
    r2 = scan(pool, bins, restarts=10, seed=17)
    assert r1.subset.as_dict() == {"f1": (1,), "f2": (1,)}
    assert r1.description == "f1 = 1 AND f2 = 1"
    assert (r1.score, r1.q, r1.odds_ratio, r1.ci95) == (r2.score, r2.q, r2.odds_ratio, r2.ci95)
    assert r1.q >= 1 and r1.score > 0 and r1.ci95[0] <= r1.odds_ratio <= r1.ci95[1]
    assert r1.observed == pytest.approx(r1.sum_y / r1.group_size)


def test_direction_duality():
    gen, ref = planted_tables(1)
    pool = merge_label(gen, ref)
    over = scan(pool, fit_bins(pool), "over", seed=2)
    flipped = merge_label(ref, gen)
    under = scan(flipped, fit_bins(flipped), "under", seed=2)
    assert over.subset == under.subset
    assert under.q <= 1.0


def test_woolf_interval_against_scipy():
    ratio, (lo, hi) = odds_ratio_ci(90, 10, 10, 90)
    ref = scipy_odds_ratio([[90, 10], [10, 90]], kind="sample").confidence_interval(0.95)
    assert ratio == 81.0
    assert (lo, hi) == pytest.approx((ref.low, ref.high), rel=1e-9)
    assert (lo, hi) == pytest.approx((32.15, 204.05), rel=1e-3)
    r, ci = odds_ratio_ci(0, 5, 5, 5)
    assert math.isfinite(r) and ci[0] < r < ci[1]
    r, ci = odds_ratio_ci(20, 20, 30, 30)
    assert r == 1.0 and ci[0] < 1.0 < ci[1]


def test_empirical_p_edges():
    gen, ref = planted_tables(2, n=600)
    pool = merge_label(gen, ref)
    bins = fit_bins(pool)
    assert empirical_p(pool, 0.0, bins, permutations=9, restarts=2) == 1.0
    with pytest.raises(ScanError):
        empirical_p(pool, 1.0, bins, permutations=0)


def test_thread_count_does_not_change_p(monkeypatch):
    gen, ref = planted_tables(3, n=800, odds=2.0)
    pool = merge_label(gen, ref)
    bins = fit_bins(pool)
    a = scan(pool, bins, restarts=3, seed=1, permutations=19, n_jobs=1)
    monkeypatch.setenv("MPEGO_THREADS", "3")
    b = scan(pool, bins, restarts=3, seed=1, permutations=19)
    assert a.p_value == b.p_value


def test_single_label_pool_rejected():
    t = FeatureTable.from_columns({"f": [0, 1, 0, 1]}, {"f": "binary"})
    cube = Cube.build(np.array([[0], [1], [0], [1]], np.int32), np.ones(4), [2], ["f"])
    with pytest.raises(ScanError):
        scan_cube(cube)
    assert t.n_rows == 4


def test_min_size_respected():
    rng = np.random.default_rng(8)
    codes, labels, n_strata = random_pool(rng, 2, 3)
    cube = cube_of(codes, labels, n_strata)
    _, allowed = scan_cube(cube, "over", 5, 0, ScanParams(min_size=150))
    n_s, _ = cube.totals(allowed)
    assert n_s >= 150


def test_descriptor_round_trip_and_mask():
    gen, ref = planted_tables(4, n=500)
    pool = merge_label(gen, ref)
    bins = fit_bins(pool)
    cube = build_cube(pool, bins)
    d = SubsetDescriptor((("f1", (1,)),))
    assert SubsetDescriptor.from_allowed(d.to_allowed(cube), cube) == d
    mask = d.mask(pool, bins)
    assert mask.sum() == cube.totals(d.to_allowed(cube))[0]
    assert np.all(pool.table.column("f1")[mask] == "1")


def test_pure_python_fallback_selected_at_import():
    import os
    import subprocess
    import sys
    code = "from mpego import _kernels; print(_kernels.BACKEND)"
    env = dict(os.environ, MPEGO_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", code], env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
