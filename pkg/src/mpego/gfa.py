"""Generation frequency analysis by multi-dimensional subset scanning.

The pooled rows are scanned for the conjunction of per-feature stratum sets
whose share of generated samples deviates most from the pooled expectation
``e_g``. Search is coordinate ascent over features, where each feature's
best stratum set is found among prefixes of a priority ordering, repeated
from several random starting subsets.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dataset import LabeledPool
from .discretize import BinningSpec, apply_bins
from .scanstat import DIRECTIONS, Q_MAX, Q_MIN, ScanError, bernoulli_score

DEFAULT_RESTARTS = 10
DEFAULT_PERMUTATIONS = 99
Z95 = 1.959963984540054
# permutation replicates draw their seeds from a separate spawn-key range
_PERM_KEY = 1 << 20


@dataclass(frozen=True)
class ScanParams:
    q_min: float = Q_MIN
    q_max: float = Q_MAX
    min_size: int = 1
    backend: str | None = None

    def to_dict(self) -> dict:
        return {"q_min": self.q_min, "q_max": self.q_max, "min_size": self.min_size}


@dataclass(frozen=True)
class Cube:
    """Pool compressed to distinct stratum combinations."""

    codes: np.ndarray      # (n_cells, n_features) int32
    inverse: np.ndarray    # row -> cell
    cell_n: np.ndarray     # rows per cell, int64
    cell_y: np.ndarray     # generated rows per cell, int64
    n_strata: np.ndarray   # int32 per feature
    names: tuple[str, ...]

    @classmethod
    def build(cls, row_codes: np.ndarray, labels: np.ndarray, n_strata, names) -> "Cube":
        codes, inverse = np.unique(row_codes, axis=0, return_inverse=True)
        inverse = inverse.reshape(-1)
        cell_n = np.bincount(inverse, minlength=len(codes)).astype(np.int64)
        cell_y = np.bincount(inverse, weights=labels, minlength=len(codes)).astype(np.int64)
        return cls(np.ascontiguousarray(codes, dtype=np.int32), inverse, cell_n, cell_y,
                   np.asarray(n_strata, dtype=np.int32), tuple(names))

    def with_labels(self, labels: np.ndarray) -> "Cube":
        cell_y = np.bincount(self.inverse, weights=labels, minlength=len(self.codes)).astype(np.int64)
        return Cube(self.codes, self.inverse, self.cell_n, cell_y, self.n_strata, self.names)

    @property
    def n_rows(self) -> int:
        return int(self.cell_n.sum())

    @property
    def n_generated(self) -> int:
        return int(self.cell_y.sum())

    def totals(self, allowed: np.ndarray) -> tuple[int, int]:
        inside = self.membership(allowed)
        return int(self.cell_n[inside].sum()), int(self.cell_y[inside].sum())

    def membership(self, allowed: np.ndarray) -> np.ndarray:
        return np.all(allowed[np.arange(self.codes.shape[1]), self.codes], axis=1)


def build_cube(pool: LabeledPool, bins: BinningSpec) -> Cube:
    dt = apply_bins(pool.table, bins)
    names = pool.table.schema.names
    return Cube.build(dt.codes, pool.labels, [bins[n].n_strata for n in names], names)


@dataclass(frozen=True)
class SubsetDescriptor:
    """Selected strata per constrained feature; absent features are unconstrained."""

    constraints: tuple[tuple[str, tuple[int, ...]], ...]

    @classmethod
    def from_allowed(cls, allowed: np.ndarray, cube: Cube) -> "SubsetDescriptor":
        out = []
        for f, name in enumerate(cube.names):
            C = int(cube.n_strata[f])
            sel = tuple(int(u) for u in np.flatnonzero(allowed[f, :C]))
            if len(sel) < C:
                out.append((name, sel))
        return cls(tuple(out))

    def as_dict(self) -> dict[str, tuple[int, ...]]:
        return dict(self.constraints)

    def to_allowed(self, cube: Cube) -> np.ndarray:
        allowed = _all_allowed(cube)
        for name, sel in self.constraints:
            f = cube.names.index(name)
            allowed[f, :] = 0
            allowed[f, list(sel)] = 1
        return allowed

    def render(self, bins: BinningSpec | None = None) -> str:
        if not self.constraints:
            return "(all rows)"
        parts = []
        for name, sel in self.constraints:
            if bins is None:
                parts.append(f"{name} ∈ {{{', '.join(map(str, sel))}}}")
            else:
                parts.append(bins[name].subset_label(sel))
        return " AND ".join(parts)

    def mask(self, pool: LabeledPool, bins: BinningSpec) -> np.ndarray:
        codes = apply_bins(pool.table, bins).codes
        inside = np.ones(pool.n_rows, dtype=bool)
        for name, sel in self.constraints:
            inside &= np.isin(codes[:, pool.table.schema.index(name)], sel)
        return inside


@dataclass(frozen=True)
class ScanResult:
    subset: SubsetDescriptor
    description: str
    group_size: int
    sum_y: int
    expected: float
    observed: float
    q: float
    score: float
    odds_ratio: float
    ci95: tuple[float, float]
    direction: str
    elapsed_seconds: float
    p_value: float | None = None
    permutations: int = 0
    restarts: int = DEFAULT_RESTARTS
    seed: int = 0
    params: ScanParams = field(default_factory=ScanParams)
    backend: str = "python"
    generated: str = "generated"
    baseline: str = "reference"

    def to_dict(self) -> dict:
        return {
            "model": self.generated,
            "baseline": self.baseline,
            "direction": self.direction,
            "expected": self.expected,
            "subset": {name: list(sel) for name, sel in self.subset.constraints},
            "description": self.description,
            "group_size": self.group_size,
            "generated_in_group": self.sum_y,
            "observed": self.observed,
            "q": self.q,
            "odds_ratio": self.odds_ratio,
            "ci95": list(self.ci95),
            "p_value": self.p_value,
            "score": self.score,
            "elapsed_seconds": self.elapsed_seconds,
            "restarts": self.restarts,
            "permutations": self.permutations,
            "seed": self.seed,
            "params": self.params.to_dict(),
        }


def _all_allowed(cube: Cube) -> np.ndarray:
    c_max = int(cube.n_strata.max()) if len(cube.n_strata) else 1
    allowed = np.zeros((len(cube.n_strata), max(c_max, 1)), dtype=np.uint8)
    for f, C in enumerate(cube.n_strata):
        allowed[f, :C] = 1
    return allowed


def random_start(cube: Cube, rng: np.random.Generator) -> np.ndarray:
    """Each feature is unconstrained with probability 1/2, else a random proper subset."""
    allowed = _all_allowed(cube)
    eligible = [f for f, C in enumerate(cube.n_strata) if C >= 2]
    if not eligible:
        raise ScanError("no feature has two or more strata; nothing can be constrained")

    def constrain(f: int) -> None:
        C = int(cube.n_strata[f])
        if C <= 62:
            bits = int(rng.integers(1, 2 ** C - 1))  # uniform over non-empty proper subsets
            allowed[f, :C] = [(bits >> u) & 1 for u in range(C)]
            return
        while True:  # same distribution by rejection when a bitmask would overflow
            pick = rng.integers(0, 2, C)
            if 0 < pick.sum() < C:
                allowed[f, :C] = pick
                return

    constrained = False
    for f in eligible:
        if rng.random() >= 0.5:
            constrain(f)
            constrained = True
    if not constrained:
        constrain(eligible[int(rng.integers(len(eligible)))])
    return allowed


def _restart_rng(seed: int, r: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(r,)))


def scan_cube(cube: Cube, direction: str = "over", restarts: int = DEFAULT_RESTARTS, seed: int = 0,
              params: ScanParams | None = None) -> tuple[float, np.ndarray]:
    """Best ``(score, allowed)`` over ``restarts`` coordinate-ascent runs."""
    if direction not in DIRECTIONS:
        raise ScanError(f"direction must be 'over' or 'under', got {direction!r}")
    if restarts < 1:
        raise ScanError("restarts must be at least 1")
    params = params or ScanParams()
    n, ng = cube.n_rows, cube.n_generated
    if ng == 0 or ng == n:
        raise ScanError("pool must contain both generated and baseline rows")
    e_g = ng / n
    ascend = _kernels.get_ascend(params.backend)
    over = direction == "over"
    best_score, best_allowed = -math.inf, None
    for r in range(restarts):
        rng = _restart_rng(seed, r)
        allowed = random_start(cube, rng)
        # each restart also visits features in its own order, so restarts
        # explore different basins rather than repeating the same sweep path
        order = rng.permutation(len(cube.n_strata))
        view = np.ascontiguousarray(allowed[order])
        score, _ = ascend(np.ascontiguousarray(cube.codes[:, order]), cube.cell_n, cube.cell_y,
                          np.ascontiguousarray(cube.n_strata[order]), view, e_g, over,
                          params.q_min, params.q_max, params.min_size)
        allowed[order] = view
        if score > best_score:
            best_score, best_allowed = score, allowed
    return best_score, best_allowed


def subset_odds_ratio(pool: LabeledPool, inside: np.ndarray) -> tuple[float, tuple[float, float]]:
    """Odds ratio of being generated inside vs. outside the subset, with Woolf 95% CI.

    Adds 0.5 to every cell when any cell is zero.
    """
    inside = np.asarray(inside, dtype=bool)
    if not inside.any() or inside.all():
        raise ScanError("subset and its complement must both be non-empty")
    y = pool.labels.astype(bool)
    return odds_ratio_ci(int(np.sum(y & inside)), int(np.sum(~y & inside)),
                         int(np.sum(y & ~inside)), int(np.sum(~y & ~inside)))


def odds_ratio_ci(a: int, b: int, c: int, d: int) -> tuple[float, tuple[float, float]]:
    """``a``/``b``: generated/baseline inside; ``c``/``d``: generated/baseline outside."""
    if min(a, b, c, d) == 0:
        a, b, c, d = a + 0.5, b + 0.5, c + 0.5, d + 0.5
    ratio = (a * d) / (b * c)
    half = Z95 * math.sqrt(1 / a + 1 / b + 1 / c + 1 / d)
    log_or = math.log(ratio)
    return ratio, (math.exp(log_or - half), math.exp(log_or + half))


def _threads(n_jobs: int | None) -> int:
    if n_jobs is not None:
        return max(1, n_jobs)
    try:
        return max(1, int(os.environ.get("MPEGO_THREADS", "1")))
    except ValueError:
        return 1


def permutation_scores(cube: Cube, direction: str, permutations: int, restarts: int, seed: int,
                       params: ScanParams | None = None, n_jobs: int | None = None) -> np.ndarray:
    """Best scan scores on label-shuffled copies of the pool."""
    if permutations < 1:
        raise ScanError("permutations must be at least 1")
    labels = np.zeros(cube.n_rows, dtype=np.int64)
    # reconstruct row labels in cell order; only the multiset matters for shuffling
    labels[: cube.n_generated] = 1
    row_cells = cube.inverse

    def one(i: int) -> float:
        ss = np.random.SeedSequence(seed, spawn_key=(_PERM_KEY + i,))
        rng = np.random.default_rng(ss)
        shuffled = rng.permutation(labels)
        null_cube = Cube(cube.codes, row_cells, cube.cell_n,
                         np.bincount(row_cells, weights=shuffled, minlength=len(cube.codes)).astype(np.int64),
                         cube.n_strata, cube.names)
        score, _ = scan_cube(null_cube, direction, restarts, int(ss.generate_state(1)[0]), params)
        return score

    workers = _threads(n_jobs)
    if workers == 1:
        return np.array([one(i) for i in range(permutations)])
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return np.array(list(ex.map(one, range(permutations))))


def empirical_p(pool: LabeledPool, observed_score: float, bins: BinningSpec, direction: str = "over",
                permutations: int = DEFAULT_PERMUTATIONS, restarts: int = DEFAULT_RESTARTS,
                seed: int = 0, params: ScanParams | None = None, n_jobs: int | None = None,
                cube: Cube | None = None) -> float:
    """``(1 + #null scores >= observed) / (1 + permutations)``."""
    if permutations < 1:
        raise ScanError("permutations must be at least 1")
    cube = cube or build_cube(pool, bins)
    null = permutation_scores(cube, direction, permutations, restarts, seed, params, n_jobs)
    return (1 + int(np.sum(null >= observed_score))) / (1 + permutations)


def scan(pool: LabeledPool, bins: BinningSpec, direction: str = "over", restarts: int = DEFAULT_RESTARTS,
         seed: int = 0, params: ScanParams | None = None, permutations: int = 0,
         n_jobs: int | None = None) -> ScanResult:
    """Find the most over- (or under-) generated subgroup of the pool.

    With ``permutations > 0`` an empirical p-value from label-permutation
    rescans is attached; the permutation time is not part of ``elapsed_seconds``.
    """
    params = params or ScanParams()
    t0 = time.perf_counter()
    cube = build_cube(pool, bins)
    score, allowed = scan_cube(cube, direction, restarts, seed, params)
    elapsed = time.perf_counter() - t0

    subset = SubsetDescriptor.from_allowed(allowed, cube)
    if not subset.constraints:
        raise ScanError("scan ended without a constrained subset")
    n_s, sum_y = cube.totals(allowed)
    _, q = bernoulli_score(n_s, sum_y, pool.e_g, direction, params.q_min, params.q_max)
    inside = subset.mask(pool, bins)
    if inside.all():
        odds, ci = 1.0, (1.0, 1.0)
    else:
        odds, ci = subset_odds_ratio(pool, inside)

    p = None
    if permutations:
        p = empirical_p(pool, score, bins, direction, permutations, restarts, seed, params, n_jobs, cube)

    return ScanResult(
        subset=subset,
        description=subset.render(bins),
        group_size=n_s,
        sum_y=sum_y,
        expected=pool.e_g,
        observed=sum_y / n_s if n_s else float("nan"),
        q=q,
        score=score,
        odds_ratio=odds,
        ci95=ci,
        direction=direction,
        elapsed_seconds=elapsed,
        p_value=p,
        permutations=permutations,
        restarts=restarts,
        seed=seed,
        params=params,
        backend=_kernels.BACKEND if params.backend in (None, "auto") else params.backend,
        generated=pool.sources[0],
        baseline=pool.sources[1],
    )

