"""Hierarchical independence evaluation.

Scores are built bottom-up: a sub-feature score per stratum (SIS), a
feature score (FIS) aggregated from SIS or computed directly on raw values,
a selective aggregate over a named feature group (SAFIS) and a global
aggregate over all features (GAFIS).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from . import measures as M
from .dataset import FeatureKind, FeatureTable, merge_label
from .discretize import DEFAULT_BINS, DEFAULT_METHOD, DiscretizedTable, apply_bins, fit_bins

WEIGHT_SCHEMES = ("uniform", "support-weighted", "custom")


class HieError(ValueError):
    pass


def _value(s) -> float:
    return s.value if isinstance(s, M.IndependenceScore) else float(s)


@dataclass(frozen=True)
class AggregationWeights:
    weights: tuple[float, ...]
    scheme: str = "uniform"

    def __post_init__(self):
        if self.scheme not in WEIGHT_SCHEMES:
            raise HieError(f"unknown weight scheme {self.scheme!r}")
        if any(w < 0 or not math.isfinite(w) for w in self.weights):
            raise HieError("weights must be finite and non-negative")
        if self.weights and abs(math.fsum(self.weights) - 1.0) > 1e-9:
            raise HieError(f"weights must sum to 1, got {math.fsum(self.weights)}")

    @classmethod
    def uniform(cls, n: int) -> "AggregationWeights":
        if n < 1:
            raise HieError("cannot build weights for zero items")
        return cls(tuple([1.0 / n] * n), "uniform")

    @classmethod
    def from_raw(cls, raw: Sequence[float], scheme: str = "custom") -> "AggregationWeights":
        total = math.fsum(raw)
        if total <= 0:
            raise HieError("weights must have a positive sum")
        return cls(tuple(w / total for w in raw), scheme)

    def __len__(self) -> int:
        return len(self.weights)


def _aggregate(scores: Sequence, weights: AggregationWeights | None) -> float:
    vals = [_value(s) for s in scores]
    if not vals:
        raise HieError("nothing to aggregate")
    if weights is None or weights.scheme == "uniform":
        if weights is not None and len(weights) != len(vals):
            raise HieError(f"{len(weights)} weights for {len(vals)} scores")
        return math.fsum(vals) / len(vals)
    if len(weights) != len(vals):
        raise HieError(f"{len(weights)} weights for {len(vals)} scores")
    return min(1.0, max(0.0, math.fsum(w * v for w, v in zip(weights.weights, vals))))


def fis(sis_scores: Sequence, weights: AggregationWeights | None = None,
        measure: str = M.DEFAULT_MEASURE) -> M.IndependenceScore:
    """Feature score as the weighted sum of its stratum scores (mean when uniform)."""
    return M.IndependenceScore(_aggregate(sis_scores, weights), measure)


def fis_direct(gen_values, ref_values, measure: str) -> M.IndependenceScore:
    info = M.measure_info(measure)
    if info.level != "distribution":
        raise HieError(f"{measure} works on pivot tables; use sis() and fis() instead")
    return M.distribution_independence(gen_values, ref_values, measure)


def safis(fis_by_feature: Mapping[str, float], selection: Sequence[str],
          weights: AggregationWeights | None = None,
          measure: str = M.DEFAULT_MEASURE) -> M.IndependenceScore:
    if not selection:
        raise HieError("feature selection is empty")
    unknown = [f for f in selection if f not in fis_by_feature]
    if unknown:
        raise HieError(f"selection names unscored features: {unknown}")
    if set(selection) >= set(fis_by_feature) and len(fis_by_feature) > 1:
        raise HieError("selection covers every feature; use gafis()")
    return M.IndependenceScore(_aggregate([fis_by_feature[f] for f in selection], weights), measure)


def gafis(fis_by_feature: Mapping[str, float], weights: AggregationWeights | None = None,
          measure: str = M.DEFAULT_MEASURE) -> M.IndependenceScore:
    if not fis_by_feature:
        raise HieError("no feature scores to aggregate")
    return M.IndependenceScore(_aggregate(list(fis_by_feature.values()), weights), measure)


@dataclass(frozen=True)
class StratumScore:
    stratum: int
    label: str
    score: float
    counts: M.PivotCounts


def sis(gen: DiscretizedTable, ref: DiscretizedTable, feature: str,
        measure: str = M.DEFAULT_MEASURE) -> tuple[list[StratumScore], list[str]]:
    """Score every stratum of ``feature``.

    Returns the scored strata and the labels of strata skipped because their
    pivot table is undefined (empty in both populations, or covering both).
    """
    if M.measure_info(measure).level != "pivot":
        raise HieError(f"{measure} is a distribution-level measure; use fis_direct()")
    fb = gen.spec[feature]
    if ref.spec[feature] != fb:
        raise HieError(f"{feature}: populations were discretized differently")
    labels = fb.labels
    tables = M.pivot_table(gen.column(feature), ref.column(feature), fb.n_strata)
    scored, skipped = [], []
    for u, c in enumerate(tables):
        if (c.alpha == 0 and c.delta == 0) or (c.beta == 0 and c.gamma == 0):
            skipped.append(labels[u])
            continue
        scored.append(StratumScore(u, labels[u], M.pivot_independence(c, measure).value, c))
    return scored, skipped


@dataclass
class HieConfig:
    measure: str = M.DEFAULT_MEASURE
    discretizer: str = DEFAULT_METHOD
    bins: int = DEFAULT_BINS
    bin_fit: str = "pooled"
    sis_weights: str = "uniform"
    fis_weights: str | Mapping[str, float] = "uniform"
    groups: Mapping[str, Sequence[str]] = field(default_factory=dict)
    seed: int = 0
    # pivot measure used for non-continuous features when measure is distribution-level
    categorical_fallback: str = M.DEFAULT_MEASURE

    def __post_init__(self):
        M.measure_info(self.measure)
        if M.measure_info(self.categorical_fallback).level != "pivot":
            raise HieError("categorical_fallback must be a pivot-table measure")
        if self.sis_weights not in ("uniform", "support-weighted"):
            raise HieError(f"unknown SIS weight scheme {self.sis_weights!r}")
        if isinstance(self.fis_weights, str) and self.fis_weights != "uniform":
            raise HieError("feature weights must be 'uniform' or a feature->weight mapping")

    def to_dict(self) -> dict:
        return {
            "measure": self.measure,
            "normalization": M.measure_info(self.measure).normalization,
            "discretizer": self.discretizer,
            "bins": self.bins,
            "bin_fit": self.bin_fit,
            "sis_weights": self.sis_weights,
            "fis_weights": self.fis_weights if isinstance(self.fis_weights, str) else dict(self.fis_weights),
            "groups": {k: list(v) for k, v in self.groups.items()},
            "seed": self.seed,
            "categorical_fallback": self.categorical_fallback,
        }


@dataclass(frozen=True)
class FeatureReport:
    name: str
    kind: str
    method: str  # "sis:<measure>" or "direct:<measure>"
    sis: tuple[StratumScore, ...]
    skipped: tuple[str, ...]
    fis: float

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "kind": self.kind,
            "method": self.method,
            "sis": [{"stratum": s.label, "score": s.score, "pivot": list(s.counts)} for s in self.sis],
            "skipped_strata": list(self.skipped),
            "fis": self.fis,
        }


@dataclass(frozen=True)
class GroupReport:
    group: str
    members: tuple[str, ...]
    score: float


@dataclass(frozen=True)
class HieReport:
    generated: str
    baseline: str
    config: HieConfig
    features: tuple[FeatureReport, ...]
    safis: tuple[GroupReport, ...]
    gafis: float
    bins: dict

    @property
    def comparison(self) -> str:
        return f"{self.generated} vs. {self.baseline}"

    def fis_by_feature(self) -> dict[str, float]:
        return {f.name: f.fis for f in self.features}

    def feature(self, name: str) -> FeatureReport:
        for f in self.features:
            if f.name == name:
                return f
        raise KeyError(name)

    def all_scores(self) -> list[float]:
        out = [s.score for f in self.features for s in f.sis]
        out += [f.fis for f in self.features]
        out += [g.score for g in self.safis]
        out.append(self.gafis)
        return out

    def to_dict(self) -> dict:
        return {
            "comparison": {"generated": self.generated, "baseline": self.baseline,
                           "label": self.comparison},
            "config": self.config.to_dict(),
            "bins": self.bins,
            "features": [f.to_dict() for f in self.features],
            "safis": [{"group": g.group, "members": list(g.members), "score": g.score} for g in self.safis],
            "gafis": self.gafis,
        }


def _sis_weights(scored: list[StratumScore], scheme: str) -> AggregationWeights:
    if scheme == "uniform":
        return AggregationWeights.uniform(len(scored))
    support = [s.counts.alpha + s.counts.delta for s in scored]
    return AggregationWeights.from_raw(support, "support-weighted")


def _fis_weights(names: Sequence[str], spec) -> AggregationWeights:
    if isinstance(spec, str):
        return AggregationWeights.uniform(len(names))
    missing = [n for n in names if n not in spec]
    if missing:
        raise HieError(f"feature weights missing for {missing}")
    return AggregationWeights.from_raw([float(spec[n]) for n in names])


def score_feature(gen: FeatureTable, base: FeatureTable, dgen: DiscretizedTable,
                  dbase: DiscretizedTable, name: str, cfg: HieConfig) -> FeatureReport:
    kind = gen.schema.kind(name)
    if M.measure_info(cfg.measure).level == "distribution" and kind is FeatureKind.CONTINUOUS:
        score = fis_direct(gen.column(name), base.column(name), cfg.measure).value
        return FeatureReport(name, kind.value, f"direct:{cfg.measure}", (), (), score)

    measure = cfg.measure if M.measure_info(cfg.measure).level == "pivot" else cfg.categorical_fallback
    scored, skipped = sis(dgen, dbase, name, measure)
    if scored:
        value = fis([s.score for s in scored], _sis_weights(scored, cfg.sis_weights), measure).value
    else:
        # every stratum is shared by both populations in full: nothing separates them
        value = 1.0
    return FeatureReport(name, kind.value, f"sis:{measure}", tuple(scored), tuple(skipped), value)


def run_hie(gen: FeatureTable, baseline: FeatureTable, config: HieConfig | None = None,
            spec=None) -> HieReport:
    """Full hierarchy for one comparison (generated vs. training or vs. another model).

    ``spec`` overrides bin fitting, e.g. to share strata across comparisons.
    """
    cfg = config or HieConfig()
    pool = merge_label(gen, baseline)
    if spec is None:
        spec = fit_bins(pool, cfg.discretizer, cfg.bins, cfg.bin_fit, cfg.seed)
    dgen, dbase = apply_bins(gen, spec), apply_bins(baseline, spec)

    features = tuple(score_feature(gen, baseline, dgen, dbase, name, cfg) for name in gen.schema.names)
    fis_map = {f.name: f.fis for f in features}
    names = list(fis_map)

    groups = []
    for gname, members in cfg.groups.items():
        members = list(members)
        w = None if isinstance(cfg.fis_weights, str) else _fis_weights(members, cfg.fis_weights)
        groups.append(GroupReport(gname, tuple(members), safis(fis_map, members, w, cfg.measure).value))

    global_score = gafis(fis_map, _fis_weights(names, cfg.fis_weights), cfg.measure).value
    report = HieReport(gen.source, baseline.source, cfg, features, tuple(groups), global_score,
                       spec.to_dict())
    if isinstance(cfg.fis_weights, str):
        check = math.fsum(fis_map.values()) / len(fis_map)
        if abs(check - global_score) > 1e-12:
            raise HieError(f"GAFIS {global_score} disagrees with mean of FIS {check}")
    return report

