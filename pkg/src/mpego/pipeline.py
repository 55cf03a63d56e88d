"""End-to-end runs: load, subsample, fit strata, score, scan, report."""
from __future__ import annotations

import datetime as _dt
import itertools
import logging
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from ._kernels import BACKEND
from .config import EvaluationConfig
from .dataset import FeatureKind, FeatureSchema, FeatureTable, infer_schema, load_table, merge_label, subsample
from .discretize import BinningSpec, fit_feature
from .gfa import ScanParams, ScanResult, scan
from .hie import HieReport, run_hie
from .report import (SCHEMA_VERSION, Histogram, dump_json, emit_histograms, gfa_markdown, hie_markdown,
                     histograms_csv, sweep_csv, write_text)

log = logging.getLogger(__name__)


@dataclass
class RunReport:
    config: EvaluationConfig
    hie: list[HieReport] = field(default_factory=list)
    gfa: list[ScanResult] = field(default_factory=list)
    histograms: list[tuple[str, Histogram]] = field(default_factory=list)
    bins: BinningSpec | None = None
    started: str = ""
    finished: str = ""

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "tool": {"name": "mpego", "version": __version__, "scan_backend": BACKEND},
            "timestamps": {"started": self.started, "finished": self.finished},
            "config": self.config.to_dict(),
            "bins": self.bins.to_dict() if self.bins else None,
            "hie": [r.to_dict() for r in self.hie],
            "gfa": [r.to_dict() for r in self.gfa],
            "histograms": [{"comparison": c, **h.to_dict()} for c, h in self.histograms],
        }

    def markdown(self) -> str:
        parts = ["# Generative model evaluation", ""]
        by_measure: dict[str, list[HieReport]] = {}
        for r in self.hie:
            by_measure.setdefault(r.config.measure, []).append(r)
        for reports in by_measure.values():
            parts.append(hie_markdown(reports))
        if self.gfa:
            parts.append(gfa_markdown(self.gfa))
        return "\n".join(parts)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def load_inputs(cfg: EvaluationConfig) -> tuple[dict[str, FeatureTable], FeatureTable]:
    if cfg.schema:
        with open(cfg.reference, newline="") as fh:
            header = [h.strip() for h in fh.readline().rstrip("\r\n").split(cfg.delimiter)]
        schema = FeatureSchema.from_json(cfg.schema, header)
    else:
        schema = infer_schema(cfg.reference, cfg.delimiter)
    ref = load_table(cfg.reference, schema, cfg.reference_name, cfg.delimiter, cfg.drop_incomplete)
    gens = {name: load_table(path, schema, name, cfg.delimiter, cfg.drop_incomplete)
            for name, path in cfg.generated.items()}

    if cfg.subsample:
        ref = subsample(ref, cfg.subsample, cfg.seed)
        gens = {k: subsample(t, cfg.subsample, cfg.seed + i + 1) for i, (k, t) in enumerate(gens.items())}
    if cfg.balance:
        n = min([ref.n_rows, *(t.n_rows for t in gens.values())])
        if ref.n_rows > n:
            ref = subsample(ref, n, cfg.seed)
        gens = {k: (subsample(t, n, cfg.seed + i + 1) if t.n_rows > n else t)
                for i, (k, t) in enumerate(gens.items())}
    return gens, ref


def comparisons(gens: dict[str, FeatureTable], ref: FeatureTable,
                head_to_head: bool) -> list[tuple[FeatureTable, FeatureTable]]:
    pairs = [(g, ref) for g in gens.values()]
    if head_to_head:
        pairs += list(itertools.combinations(gens.values(), 2))
    return pairs


def shared_bins(tables: list[FeatureTable], ref: FeatureTable, method: str, k: int, fit_on: str,
                seed: int) -> BinningSpec:
    """One set of strata for every comparison in a run, so SIS rows line up."""
    feats = []
    for name, kind in zip(ref.schema.names, ref.schema.kinds):
        if fit_on == "reference" and kind is FeatureKind.CONTINUOUS:
            values = ref.column(name)
        else:
            values = np.concatenate([t.column(name) for t in tables])
        feats.append(fit_feature(name, kind, values, method, k, seed))
    return BinningSpec(tuple(feats), method, k, fit_on)


def run(cfg: EvaluationConfig, write: bool = True) -> RunReport:
    report = RunReport(cfg, started=_now())
    gens, ref = load_inputs(cfg)
    tables = [*gens.values(), ref]
    pairs = comparisons(gens, ref, cfg.head_to_head)
    h = cfg.hie
    bins = shared_bins(tables, ref, h["discretizer"], h["bins"], h["bin_fit"], cfg.seed)
    report.bins = bins

    if h.get("enabled", True):
        for measure in cfg.measures():
            hcfg = cfg.hie_config(measure)
            for g, b in pairs:
                log.info("HIE %s vs %s (%s)", g.source, b.source, measure)
                report.hie.append(run_hie(g, b, hcfg, spec=bins))
        for g, b in pairs:
            for hist in emit_histograms(g, b, cfg.output.get("histogram_bins", 50), bins):
                report.histograms.append((f"{g.source} vs. {b.source}", hist))

    gcfg = cfg.gfa
    if gcfg.get("enabled", True):
        params = ScanParams(gcfg["q_min"], gcfg["q_max"], gcfg["min_size"])
        for g, b in pairs:
            log.info("GFA %s vs %s", g.source, b.source)
            report.gfa.append(scan(merge_label(g, b), bins, gcfg["direction"], gcfg["restarts"], cfg.seed,
                                   params, gcfg["permutations"]))
    report.finished = _now()

    if write:
        out = cfg.output
        if out.get("json"):
            dump_json(report.to_dict(), out["json"])
        if out.get("markdown"):
            write_text(report.markdown(), out["markdown"])
        if out.get("histograms"):
            write_text(histograms_csv(report.histograms), out["histograms"])
        if out.get("bins"):
            bins.save(out["bins"])
    return report


AXES = ("measures", "discretizers", "bins")
_AXIS_ALIASES = {"bin_counts": "bins", "measure": "measures", "discretizer": "discretizers"}


def ablation_sweep(cfg: EvaluationConfig, axes: dict | list | tuple, write: bool = True):
    """HIE over the cartesian product of the requested variant axes.

    ``axes`` is either a mapping ``{axis: values}`` or a list of axis names
    whose values come from the config's ``sweep`` section. Returns the
    per-variant reports and a long-format list of FIS rows.
    """
    if not axes:
        raise ValueError(f"at least one sweep axis is required ({', '.join(AXES)})")
    if not isinstance(axes, dict):
        axes = [_AXIS_ALIASES.get(a, a) for a in axes]
        unknown = [a for a in axes if a not in AXES]
        if unknown:
            raise ValueError(f"unknown sweep axes {unknown}; valid: {', '.join(AXES)}")
        axes = {a: cfg.sweep[a] for a in axes}
    axes = {_AXIS_ALIASES.get(k, k): v for k, v in axes.items()}
    measures = list(axes.get("measures") or [cfg.measures()[0]])
    discretizers = list(axes.get("discretizers") or [cfg.hie["discretizer"]])
    bin_counts = list(axes.get("bins") or [cfg.hie["bins"]])

    gens, ref = load_inputs(cfg)
    tables = [*gens.values(), ref]
    pairs = comparisons(gens, ref, cfg.head_to_head)
    variants, rows = [], []
    for disc, k in itertools.product(discretizers, bin_counts):
        bins = shared_bins(tables, ref, disc, k, cfg.hie["bin_fit"], cfg.seed)
        for measure in measures:
            hcfg = cfg.hie_config(measure, disc, k)
            reports = [run_hie(g, b, hcfg, spec=bins) for g, b in pairs]
            variants.append(({"measure": measure, "discretizer": disc, "bins": k}, reports))
            for r in reports:
                for f in r.features:
                    rows.append({"measure": measure, "discretizer": disc, "bins": k,
                                 "comparison": r.comparison, "feature": f.name, "fis": f.fis})
    if write and cfg.output.get("sweep"):
        write_text(sweep_csv(rows), cfg.output["sweep"])
    return variants, rows
