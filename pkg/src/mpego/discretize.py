"""Discretization of continuous features into ordered strata.

Continuous features are cut into half-open intervals ``(-inf, c1)``,
``[c1, c2)``, ..., ``[c_{k-1}, +inf)``. Binary and categorical features keep
their distinct tokens as strata.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .dataset import DataError, FeatureKind, FeatureTable, LabeledPool

METHODS = ("equal-width", "equal-frequency", "kmeans")
DEFAULT_METHOD = "equal-frequency"
DEFAULT_BINS = 5


class DiscretizationError(DataError):
    pass


def _distinct_finite(values) -> np.ndarray:
    x = np.asarray(values, dtype=np.float64)
    if x.size and not np.all(np.isfinite(x)):
        raise DiscretizationError("values must be finite")
    return x


def _check_k(k: int) -> None:
    if int(k) != k or k < 2:
        raise DiscretizationError(f"bin count must be an integer >= 2, got {k!r}")


def equal_width(values, k: int) -> np.ndarray:
    """Cut points ``min + i*(max-min)/k`` for ``i = 1..k-1``."""
    _check_k(k)
    x = _distinct_finite(values)
    if x.size == 0:
        raise DiscretizationError("no values to discretize")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        raise DiscretizationError("equal-width binning needs a non-degenerate value range")
    width = (hi - lo) / k
    cuts = np.array([lo + i * width for i in range(1, k)])
    return np.unique(cuts)


def equal_frequency(values, k: int) -> np.ndarray:
    """Cut points placing about ``n/k`` sorted values in each bin.

    The i-th cut targets ``floor(i*n/k)`` values below it. When that rank
    falls inside a run of tied values, the cut snaps to whichever edge of
    the run lands closer to the target (the lower edge on a tie); cuts that
    would leave nothing below or nothing above are dropped, and duplicates
    collapse, so fewer than ``k`` bins may result.
    """
    _check_k(k)
    x = np.sort(_distinct_finite(values))
    n = x.size
    uniq, first = np.unique(x, return_index=True)
    if uniq.size < 2:
        raise DiscretizationError("equal-frequency binning needs at least two distinct values")
    # first[j]: number of values strictly below uniq[j]
    below = first
    cuts = []
    for i in range(1, k):
        target = (i * n) // k
        j = int(np.searchsorted(below, target, side="right")) - 1
        # uniq[j] has below[j] <= target; uniq[j+1] has below > target
        options = []
        if below[j] > 0:
            options.append((target - below[j], 0, uniq[j]))
        if j + 1 < uniq.size:
            options.append((below[j + 1] - target, 1, uniq[j + 1]))
        if options:
            cuts.append(min(options)[2])
    return np.unique(np.asarray(cuts, dtype=np.float64))


def _lloyd(x: np.ndarray, centroids: np.ndarray, max_iters: int,
           costs: list | None = None) -> np.ndarray:
    c = np.sort(centroids)
    for _ in range(max_iters):
        assign = np.argmin(np.abs(x[:, None] - c[None, :]), axis=1)
        if costs is not None:
            costs.append(float(np.sum((x - c[assign]) ** 2)))
        sums = np.bincount(assign, weights=x, minlength=c.size)
        counts = np.bincount(assign, minlength=c.size)
        new = c.copy()
        filled = counts > 0
        new[filled] = sums[filled] / counts[filled]
        new = np.sort(new)
        if np.array_equal(new, c):
            break
        c = new
    if costs is not None:
        assign = np.argmin(np.abs(x[:, None] - c[None, :]), axis=1)
        costs.append(float(np.sum((x - c[assign]) ** 2)))
    return c


def _kmeanspp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centroids = [x[rng.integers(x.size)]]
    d2 = (x - centroids[0]) ** 2
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            break
        pick = rng.choice(x.size, p=d2 / total)
        centroids.append(x[pick])
        d2 = np.minimum(d2, (x - x[pick]) ** 2)
    return np.array(centroids)


def kmeans_1d(values, k: int, seed: int = 0, max_iters: int = 100,
              costs: list | None = None) -> np.ndarray:
    """Cut points at midpoints between sorted 1-D k-means centroids.

    Centroids are seeded with k-means++ and refined by Lloyd iterations.
    If ``costs`` is a list, the within-cluster sum of squares before each
    iteration (and after the last) is appended to it.
    """
    _check_k(k)
    x = np.sort(_distinct_finite(values))  # input order must not affect the seeded init
    if np.unique(x).size < k:
        raise DiscretizationError(f"k-means needs at least {k} distinct values, got {np.unique(x).size}")
    rng = np.random.default_rng(seed)
    c = _lloyd(x, _kmeanspp(x, k, rng), max_iters, costs)
    c = np.unique(c)
    return (c[:-1] + c[1:]) / 2.0


def cut_points(values, method: str, k: int, seed: int = 0) -> np.ndarray:
    if method == "equal-width":
        return equal_width(values, k)
    if method == "equal-frequency":
        return equal_frequency(values, k)
    if method == "kmeans":
        return kmeans_1d(values, k, seed=seed)
    raise DiscretizationError(f"unknown discretizer {method!r}; expected one of {', '.join(METHODS)}")


def _fmt(c: float) -> str:
    return format(float(c), ".6g")


def interval_labels(cuts: Sequence[float]) -> list[str]:
    if len(cuts) == 0:
        return ["all"]
    labels = [f"<{_fmt(cuts[0])}"]
    labels += [f"[{_fmt(a)} , {_fmt(b)})" for a, b in zip(cuts[:-1], cuts[1:])]
    labels.append(f"≥{_fmt(cuts[-1])}")
    return labels


@dataclass(frozen=True)
class FeatureBins:
    """Strata for one feature: cut points (continuous) or tokens (categorical)."""

    name: str
    kind: FeatureKind
    cuts: tuple[float, ...] = ()
    categories: tuple[str, ...] = ()

    def __post_init__(self):
        if self.kind is FeatureKind.CONTINUOUS:
            if any(b <= a for a, b in zip(self.cuts, self.cuts[1:])):
                raise DiscretizationError(f"{self.name}: cut points must be strictly increasing")

    @property
    def n_strata(self) -> int:
        if self.kind is FeatureKind.CONTINUOUS:
            return len(self.cuts) + 1
        return len(self.categories)

    @property
    def labels(self) -> list[str]:
        if self.kind is FeatureKind.CONTINUOUS:
            return interval_labels(self.cuts)
        return list(self.categories)

    def assign(self, column: np.ndarray) -> np.ndarray:
        if self.kind is FeatureKind.CONTINUOUS:
            return np.searchsorted(np.asarray(self.cuts), np.asarray(column, dtype=np.float64),
                                   side="right").astype(np.int32)
        lookup = {c: i for i, c in enumerate(self.categories)}
        try:
            return np.fromiter((lookup[v] for v in column), dtype=np.int32, count=len(column))
        except KeyError as exc:
            raise DiscretizationError(f"{self.name}: category {exc.args[0]!r} not in binning spec") from None

    def subset_label(self, strata: Sequence[int]) -> str:
        """Readable condition for a set of strata, merging adjacent intervals."""
        strata = sorted(strata)
        if self.kind is not FeatureKind.CONTINUOUS:
            toks = [self.categories[s] for s in strata]
            return f"{self.name} = {toks[0]}" if len(toks) == 1 else f"{self.name} ∈ {{{', '.join(toks)}}}"
        runs: list[list[int]] = []
        for s in strata:
            if runs and runs[-1][1] == s - 1:
                runs[-1][1] = s
            else:
                runs.append([s, s])
        parts = []
        last = len(self.cuts)
        for a, b in runs:
            lo = None if a == 0 else _fmt(self.cuts[a - 1])
            hi = None if b == last else _fmt(self.cuts[b])
            if lo is None:
                parts.append(f"{self.name} <{hi}")
            elif hi is None:
                parts.append(f"{self.name} ≥{lo}")
            else:
                parts.append(f"{lo}≤ {self.name} <{hi}")
        return " OR ".join(parts)


@dataclass(frozen=True)
class BinningSpec:
    features: tuple[FeatureBins, ...]
    method: str = DEFAULT_METHOD
    k: int = DEFAULT_BINS
    fit_on: str = "pooled"

    def __getitem__(self, name: str) -> FeatureBins:
        for fb in self.features:
            if fb.name == name:
                return fb
        raise DiscretizationError(f"feature {name!r} absent from binning spec")

    @property
    def names(self) -> list[str]:
        return [fb.name for fb in self.features]

    def to_dict(self) -> dict:
        out = {}
        for fb in self.features:
            if fb.kind is FeatureKind.CONTINUOUS:
                out[fb.name] = [float(c) for c in fb.cuts]
            else:
                out[fb.name] = {"categories": list(fb.categories)}
        return out

    def save(self, path: str | Path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2))

    @classmethod
    def from_dict(cls, data: Mapping, kinds: Mapping[str, FeatureKind] | None = None) -> "BinningSpec":
        feats = []
        for name, val in data.items():
            if isinstance(val, Mapping):
                kind = (kinds or {}).get(name, FeatureKind.CATEGORICAL)
                feats.append(FeatureBins(name, kind, categories=tuple(val["categories"])))
            else:
                feats.append(FeatureBins(name, FeatureKind.CONTINUOUS, cuts=tuple(float(c) for c in val)))
        return cls(tuple(feats))


@dataclass(frozen=True)
class DiscretizedTable:
    source: FeatureTable
    spec: BinningSpec
    codes: np.ndarray  # (n_rows, n_features) int32

    def column(self, name: str) -> np.ndarray:
        return self.codes[:, self.source.schema.index(name)]

    def labels(self, name: str) -> list[str]:
        return self.spec[name].labels


def fit_feature(name: str, kind: FeatureKind, values: np.ndarray, method: str, k: int,
                seed: int = 0) -> FeatureBins:
    if kind is not FeatureKind.CONTINUOUS:
        return FeatureBins(name, kind, categories=tuple(sorted(set(values.tolist()))))
    n_distinct = np.unique(values).size
    if n_distinct < 2:
        warnings.warn(f"{name}: constant feature, kept as a single stratum", stacklevel=2)
        return FeatureBins(name, kind)
    if method == "kmeans" and n_distinct < k:
        k = max(n_distinct, 2)
    return FeatureBins(name, kind, cuts=tuple(float(c) for c in cut_points(values, method, k, seed)))


def fit_bins(pool: LabeledPool, method: str = DEFAULT_METHOD, k: int = DEFAULT_BINS,
             fit_on: str = "pooled", seed: int = 0) -> BinningSpec:
    """Fit strata for every feature of the pool.

    Cut points come from the pooled generated+baseline values, or from the
    baseline rows only when ``fit_on="reference"``. Category sets always use
    the whole pool so both populations share the same strata.
    """
    if method not in METHODS:
        raise DiscretizationError(f"unknown discretizer {method!r}; expected one of {', '.join(METHODS)}")
    if fit_on not in ("pooled", "reference"):
        raise DiscretizationError(f"fit population must be 'pooled' or 'reference', got {fit_on!r}")
    _check_k(k)
    table = pool.table
    rows = slice(None) if fit_on == "pooled" else slice(pool.n_generated, None)
    feats = []
    for name, kind, col in zip(table.schema.names, table.schema.kinds, table.columns):
        values = col if kind is not FeatureKind.CONTINUOUS else col[rows]
        feats.append(fit_feature(name, kind, values, method, k, seed))
    return BinningSpec(tuple(feats), method, k, fit_on)


def apply_bins(table: FeatureTable, spec: BinningSpec) -> DiscretizedTable:
    codes = np.empty((table.n_rows, len(table.schema)), dtype=np.int32)
    for j, (name, col) in enumerate(zip(table.schema.names, table.columns)):
        codes[:, j] = spec[name].assign(col)
    codes.setflags(write=False)
    return DiscretizedTable(table, spec, codes)
