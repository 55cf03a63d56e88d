"""Shared fixtures and independent oracles for the test suite."""
from __future__ import annotations

import itertools
import math

import numpy as np
import pytest

from mpego.dataset import FeatureTable


def continuous_table(rng, n, shifts, source, scale=1.0):
    """Gaussian features named x0..; ``shifts[i]`` moves the mean of feature i."""
    data = {f"x{i}": rng.normal(s, scale, n) for i, s in enumerate(shifts)}
    return FeatureTable.from_columns(data, {k: "continuous" for k in data}, source)


def planted_tables(seed, n=4000, odds=8.0):
    """Two binary features; rows with f1=1 and f2=1 are generated with odds ``odds``."""
    rng = np.random.default_rng(seed)
    f1 = rng.integers(0, 2, n)
    f2 = rng.integers(0, 2, n)
    p = np.where((f1 == 1) & (f2 == 1), odds / (1.0 + odds), 0.5)
    y = rng.random(n) < p
    kinds = {"f1": "binary", "f2": "binary"}
    gen = FeatureTable.from_columns({"f1": f1[y], "f2": f2[y]}, kinds, "model")
    ref = FeatureTable.from_columns({"f1": f1[~y], "f2": f2[~y]}, kinds, "train")
    return gen, ref


def oracle_score(n_s: int, sum_y: int, e_g: float, over: bool) -> float:
    """Closed-form maximum of the Bernoulli log-likelihood ratio, written out afresh."""
    if n_s == 0:
        return 0.0
    if sum_y == n_s:
        q = math.inf
    else:
        q = (sum_y * (1.0 - e_g)) / ((n_s - sum_y) * e_g)
    q = min(max(q, 1.0), 1e6) if over else min(max(q, 1e-6), 1.0)
    s = math.log(q) * sum_y - n_s * math.log(1.0 - e_g + q * e_g)
    return s if s > 0.0 else 0.0


def nonempty_subsets(c):
    for r in range(1, c + 1):
        yield from itertools.combinations(range(c), r)


def exhaustive_best(row_codes, labels, n_strata, over=True):
    """Best score over every conjunction of non-empty per-feature stratum sets, on raw rows."""
    e_g = labels.sum() / labels.size
    best = -math.inf
    per_feature = [list(nonempty_subsets(int(c))) for c in n_strata]
    for choice in itertools.product(*per_feature):
        mask = np.ones(len(labels), dtype=bool)
        for f, sel in enumerate(choice):
            if len(sel) < n_strata[f]:
                mask &= np.isin(row_codes[:, f], sel)
        s = oracle_score(int(mask.sum()), int(labels[mask].sum()), e_g, over)
        best = max(best, s)
    return best


def random_pool(rng, max_features=3, max_strata=3):
    """Random categorical pool with stratum-dependent generation rates."""
    m = int(rng.integers(1, max_features + 1))
    n_strata = rng.integers(2, max_strata + 1, m)
    n = int(rng.integers(200, 2001))
    codes = np.column_stack([rng.integers(0, c, n) for c in n_strata]).astype(np.int32)
    logit = sum(rng.normal(0, 1, c)[codes[:, f]] for f, c in enumerate(n_strata))
    labels = (rng.random(n) < 1 / (1 + np.exp(-logit))).astype(np.int64)
    if labels.sum() in (0, n):
        labels[0] = 1 - labels[0]
    return codes, labels, n_strata


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """Record one acceptance line: ``criterion(n, ok, detail)``."""
    def record(n: int, ok: bool, detail: str) -> bool:
        _ACCEPTANCE[n] = (bool(ok), detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_ACCEPTANCE):
        ok, detail = _ACCEPTANCE[n]
        terminalreporter.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
