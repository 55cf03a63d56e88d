"""Association measures between population membership and stratum membership.

Pivot-table measures read a 2x2 table of counts::

                 in stratum   not in stratum
    generated      alpha          beta
    baseline       delta          gamma

Distribution measures (Wasserstein, Kolmogorov-Smirnov) compare raw value
lists. :func:`to_independence` maps every raw value onto ``[0, 1]`` with 1 at
the measure's no-association point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np


class MeasureError(ValueError):
    pass


class PivotCounts(NamedTuple):
    alpha: int
    beta: int
    delta: int
    gamma: int

    @property
    def total(self) -> int:
        return self.alpha + self.beta + self.delta + self.gamma

    @property
    def n_generated(self) -> int:
        return self.alpha + self.beta

    @property
    def n_baseline(self) -> int:
        return self.delta + self.gamma

    def swap_populations(self) -> "PivotCounts":
        return PivotCounts(self.delta, self.gamma, self.alpha, self.beta)

    def scaled(self, factor: int) -> "PivotCounts":
        return PivotCounts(*(factor * c for c in self))


@dataclass(frozen=True)
class MeasureInfo:
    name: str
    level: str  # "pivot" or "distribution"
    raw_range: str
    normalization: str


MEASURES: dict[str, MeasureInfo] = {
    "yules-y": MeasureInfo("yules-y", "pivot", "[-1, 1]", "1 - |Y|"),
    "yules-q": MeasureInfo("yules-q", "pivot", "[-1, 1]", "1 - |Q|"),
    "odds-ratio": MeasureInfo("odds-ratio", "pivot", "(0, inf)", "1 - |OR - 1| / (OR + 1)"),
    "mutual-information": MeasureInfo("mutual-information", "pivot", "[0, ln 2] nats",
                                      "1 - MI / ln 2, clamped to [0, 1]"),
    "gini": MeasureInfo("gini", "pivot", "[0, 2 e_g (1 - e_g)]", "1 - G / (2 e_g (1 - e_g))"),
    "wasserstein": MeasureInfo("wasserstein", "distribution", "[0, inf)",
                               "1 - W1 / pooled value range, clamped to [0, 1]"),
    "ks": MeasureInfo("ks", "distribution", "[0, 1]", "1 - D"),
}
PIVOT_MEASURES = tuple(k for k, v in MEASURES.items() if v.level == "pivot")
DISTRIBUTION_MEASURES = tuple(k for k, v in MEASURES.items() if v.level == "distribution")
DEFAULT_MEASURE = "yules-y"


def measure_info(name: str) -> MeasureInfo:
    try:
        return MEASURES[name]
    except KeyError:
        raise MeasureError(f"unknown measure {name!r}; valid measures: {', '.join(MEASURES)}") from None


@dataclass(frozen=True)
class IndependenceScore:
    value: float
    measure: str

    def __float__(self) -> float:
        return self.value


def pivot(gen_strata, ref_strata, u: int, n_strata: int | None = None) -> PivotCounts:
    g = np.asarray(gen_strata)
    r = np.asarray(ref_strata)
    if g.size == 0 or r.size == 0:
        raise MeasureError("both populations must be non-empty")
    if u < 0 or (n_strata is not None and u >= n_strata):
        raise MeasureError(f"invalid stratum index {u}")
    alpha = int(np.count_nonzero(g == u))
    delta = int(np.count_nonzero(r == u))
    return PivotCounts(alpha, g.size - alpha, delta, r.size - delta)


def pivot_table(gen_codes: np.ndarray, ref_codes: np.ndarray, n_strata: int) -> list[PivotCounts]:
    """Pivot tables for every stratum of one feature at once."""
    g = np.bincount(gen_codes, minlength=n_strata)
    r = np.bincount(ref_codes, minlength=n_strata)
    ng, nr = int(g.sum()), int(r.sum())
    if ng == 0 or nr == 0:
        raise MeasureError("both populations must be non-empty")
    return [PivotCounts(int(a), ng - int(a), int(d), nr - int(d)) for a, d in zip(g, r)]


def _check_defined(c: PivotCounts) -> tuple[int, int]:
    ad, bc = c.alpha * c.gamma, c.beta * c.delta
    if ad == 0 and bc == 0:
        raise MeasureError(f"association undefined for pivot {tuple(c)} (both cross products are zero)")
    return ad, bc


def yules_y(c: PivotCounts) -> float:
    ad, bc = _check_defined(c)
    sa, sb = math.sqrt(ad), math.sqrt(bc)
    return (sa - sb) / (sa + sb)


def yules_q(c: PivotCounts) -> float:
    ad, bc = _check_defined(c)
    return (ad - bc) / (ad + bc)


def odds_ratio_measure(c: PivotCounts) -> float:
    """Cross-product ratio, with 0.5 added to every cell if any cell is empty."""
    a, b, d, g = c
    if 0 in c:
        a, b, d, g = a + 0.5, b + 0.5, d + 0.5, g + 0.5
    return (a * g) / (b * d)


def _joint(c: PivotCounts) -> tuple[list[list[int]], int]:
    return [[c.alpha, c.beta], [c.delta, c.gamma]], c.total


def mutual_information_2x2(c: PivotCounts) -> float:
    """Mutual information (nats) between population and stratum membership."""
    cells, n = _joint(c)
    if n <= 0:
        raise MeasureError("pivot table is empty")
    rows = [sum(r) for r in cells]
    cols = [cells[0][j] + cells[1][j] for j in range(2)]
    mi = 0.0
    for i in range(2):
        for j in range(2):
            nij = cells[i][j]
            if nij:
                # integer products keep independent tables exactly at log(1) = 0
                mi += nij / n * math.log((nij * n) / (rows[i] * cols[j]))
    return max(mi, 0.0)


def gini_measure(c: PivotCounts) -> float:
    """Gini gain of stratum membership (A) for predicting population (B).

    ``G = P(A)[P(B|A)^2 + P(~B|A)^2] + P(~A)[P(B|~A)^2 + P(~B|~A)^2]
    - P(B)^2 - P(~B)^2``, evaluated in exact rational arithmetic.
    """
    n = c.total
    if n <= 0:
        raise MeasureError("pivot table is empty")
    in_a = (c.alpha, c.delta)  # (generated, baseline) inside the stratum
    out_a = (c.beta, c.gamma)
    g = Fraction(0)
    for part in (in_a, out_a):
        m = sum(part)
        if m:
            g += Fraction(part[0] ** 2 + part[1] ** 2, m * n)
    g -= Fraction(c.n_generated ** 2 + c.n_baseline ** 2, n * n)
    return float(g)


def _sorted_sample(values, name: str) -> np.ndarray:
    x = np.asarray(values, dtype=np.float64)
    if x.size == 0:
        raise MeasureError(f"{name}: empty sample")
    return np.sort(x)


def _ecdf_steps(a: np.ndarray, b: np.ndarray):
    grid = np.unique(np.concatenate([a, b]))
    fa = np.searchsorted(a, grid, side="right") / a.size
    fb = np.searchsorted(b, grid, side="right") / b.size
    return grid, fa, fb


def wasserstein_1d(gen_values, ref_values) -> float:
    """1-Wasserstein distance: area between the two empirical CDFs."""
    a = _sorted_sample(gen_values, "wasserstein")
    b = _sorted_sample(ref_values, "wasserstein")
    grid, fa, fb = _ecdf_steps(a, b)
    return float(np.sum(np.abs(fa[:-1] - fb[:-1]) * np.diff(grid)))


def ks_statistic(gen_values, ref_values) -> float:
    """Two-sample Kolmogorov-Smirnov statistic (sup distance between ECDFs)."""
    a = _sorted_sample(gen_values, "ks")
    b = _sorted_sample(ref_values, "ks")
    _, fa, fb = _ecdf_steps(a, b)
    return float(np.max(np.abs(fa - fb)))


_PIVOT_FUNCS = {
    "yules-y": yules_y,
    "yules-q": yules_q,
    "odds-ratio": odds_ratio_measure,
    "mutual-information": mutual_information_2x2,
    "gini": gini_measure,
}


def raw_pivot_measure(c: PivotCounts, measure: str) -> float:
    info = measure_info(measure)
    if info.level != "pivot":
        raise MeasureError(f"{measure} is a distribution-level measure, not a pivot-table measure")
    return _PIVOT_FUNCS[measure](c)


def raw_distribution_measure(gen_values, ref_values, measure: str) -> float:
    info = measure_info(measure)
    if info.level != "distribution":
        raise MeasureError(f"{measure} is a pivot-table measure, not a distribution-level measure")
    return wasserstein_1d(gen_values, ref_values) if measure == "wasserstein" else ks_statistic(gen_values, ref_values)


def _clamp(x: float) -> float:
    return min(1.0, max(0.0, x))


def to_independence(raw: float, measure: str, *, e_g: float | None = None,
                    value_range: float | None = None) -> IndependenceScore:
    """Normalize a raw measure value to an independence score in [0, 1].

    Gini needs ``e_g`` (fraction of generated rows in the pivot) and
    Wasserstein needs the pooled ``value_range``.
    """
    measure_info(measure)
    if measure in ("yules-y", "yules-q"):
        if not -1.0 <= raw <= 1.0:
            raise MeasureError(f"{measure} value {raw} outside [-1, 1]")
        v = 1.0 - abs(raw)
    elif measure == "ks":
        if not 0.0 <= raw <= 1.0:
            raise MeasureError(f"ks value {raw} outside [0, 1]")
        v = 1.0 - raw
    elif measure == "odds-ratio":
        if raw <= 0:
            raise MeasureError("odds ratio must be positive")
        v = 1.0 - abs(raw - 1.0) / (raw + 1.0)
    elif measure == "mutual-information":
        if raw < 0:
            raise MeasureError("mutual information must be non-negative")
        v = _clamp(1.0 - raw / math.log(2.0))
    elif measure == "gini":
        if e_g is None:
            raise MeasureError("gini normalization needs e_g")
        if not 0.0 < e_g < 1.0:
            raise MeasureError(f"e_g must lie in (0, 1), got {e_g}")
        v = _clamp(1.0 - raw / (2.0 * e_g * (1.0 - e_g)))
    else:  # wasserstein
        if value_range is None:
            raise MeasureError("wasserstein normalization needs the pooled value range")
        if raw < 0:
            raise MeasureError("wasserstein distance must be non-negative")
        v = 1.0 if value_range <= 0 else _clamp(1.0 - raw / value_range)
    return IndependenceScore(v, measure)


def pivot_independence(c: PivotCounts, measure: str) -> IndependenceScore:
    raw = raw_pivot_measure(c, measure)
    return to_independence(raw, measure, e_g=c.n_generated / c.total)


def distribution_independence(gen_values: Sequence[float], ref_values: Sequence[float],
                              measure: str) -> IndependenceScore:
    raw = raw_distribution_measure(gen_values, ref_values, measure)
    pooled = np.concatenate([np.asarray(gen_values, float), np.asarray(ref_values, float)])
    return to_independence(raw, measure, value_range=float(pooled.max() - pooled.min()))
