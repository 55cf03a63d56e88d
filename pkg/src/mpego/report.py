"""JSON, Markdown and CSV emitters for evaluation results."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dataset import FeatureKind, FeatureTable
from .gfa import ScanResult
from .hie import HieReport

SCHEMA_VERSION = "1"
DEFAULT_HISTOGRAM_BINS = 50


def fmt3(x: float | None) -> str:
    """Three decimals, half-to-even on the stored double."""
    if x is None:
        return "-"
    return f"{round(float(x), 3):.3f}"


def _row(cells: Iterable[str]) -> str:
    return "| " + " | ".join(cells) + " |"


def hie_markdown(reports: Sequence[HieReport]) -> str:
    """Feature, group and global scores in one table, one column per comparison."""
    if not reports:
        return ""
    heads = [r.comparison for r in reports]
    lines = [_row(["Level", "Feature", *heads]), _row(["---"] * (2 + len(heads)))]
    names = [f.name for f in reports[0].features]
    for i, name in enumerate(names):
        lines.append(_row(["FIS" if i == 0 else "", name, *(fmt3(r.feature(name).fis) for r in reports)]))
    for i, g in enumerate(reports[0].safis):
        vals = [fmt3(next(x.score for x in r.safis if x.group == g.group)) for r in reports]
        lines.append(_row(["SAFIS" if i == 0 else "", g.group, *vals]))
    lines.append(_row(["GAFIS", "", *(fmt3(r.gafis) for r in reports)]))
    out = ["## Hierarchical independence scores", "",
           f"Measure: {reports[0].config.measure}; discretizer: {reports[0].config.discretizer} "
           f"({reports[0].config.bins} bins)", "", *lines, ""]
    out += sis_markdown(reports)
    return "\n".join(out)


def sis_markdown(reports: Sequence[HieReport]) -> list[str]:
    out = []
    for feat in reports[0].features:
        if not feat.sis:
            continue
        labels: list[str] = []
        for r in reports:
            for s in r.feature(feat.name).sis:
                if s.label not in labels:
                    labels.append(s.label)
        out += [f"### SIS: {feat.name}", "",
                _row(["Stratum", *(r.comparison for r in reports)]),
                _row(["---"] * (1 + len(reports)))]
        for lab in labels:
            cells = []
            for r in reports:
                hit = [s.score for s in r.feature(feat.name).sis if s.label == lab]
                cells.append(fmt3(hit[0]) if hit else "-")
            out.append(_row([lab, *cells]))
        out.append("")
    return out


GFA_COLUMNS = ["Model", "Baseline", "Expected", "Subset", "Group size", "Observed", "q factor",
               "Odds ratio", "95% CI", "p-value", "Score", "Elapsed"]


def gfa_markdown(results: Sequence[ScanResult]) -> str:
    lines = ["## Generation frequency analysis", "", _row(GFA_COLUMNS), _row(["---"] * len(GFA_COLUMNS))]
    for r in results:
        lines.append(_row([
            r.generated, r.baseline, fmt3(r.expected), r.description.replace("|", "\\|"),
            str(r.group_size), fmt3(r.observed), fmt3(r.q), fmt3(r.odds_ratio),
            f"({fmt3(r.ci95[0])}, {fmt3(r.ci95[1])})", fmt3(r.p_value), fmt3(r.score),
            fmt3(r.elapsed_seconds),
        ]))
    lines.append("")
    return "\n".join(lines)


@dataclass(frozen=True)
class Histogram:
    feature: str
    edges: np.ndarray
    densities: dict[str, np.ndarray]

    def to_dict(self) -> dict:
        return {"feature": self.feature, "edges": self.edges.tolist(),
                "densities": {k: v.tolist() for k, v in self.densities.items()}}


def emit_histograms(gen: FeatureTable, ref: FeatureTable, n_bins: int = DEFAULT_HISTOGRAM_BINS,
                    bins=None) -> list[Histogram]:
    """Shared-edge density histograms for every continuous feature.

    ``bins`` (a BinningSpec) is accepted so callers can pass the scoring
    strata alongside; the fine edges are always uniform over the pooled range.
    """
    if gen.schema != ref.schema:
        raise ValueError("tables must share a schema")
    out = []
    for name, kind in zip(gen.schema.names, gen.schema.kinds):
        if kind is not FeatureKind.CONTINUOUS:
            continue
        g, r = gen.column(name), ref.column(name)
        lo = float(min(g.min(), r.min()))
        hi = float(max(g.max(), r.max()))
        if hi == lo:
            lo, hi = lo - 0.5, hi + 0.5
        edges = np.linspace(lo, hi, n_bins + 1)
        dens = {}
        for label, values in ((gen.source, g), (ref.source, r)):
            counts, _ = np.histogram(values, bins=edges)
            dens[label] = counts / (counts.sum() * np.diff(edges))
        out.append(Histogram(name, edges, dens))
    return out


def histograms_csv(entries: Iterable[tuple[str, Histogram]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["comparison", "feature", "bin_left", "bin_right", "population", "density"])
    for comparison, h in entries:
        for pop, d in h.densities.items():
            for i, v in enumerate(d):
                w.writerow([comparison, h.feature, repr(float(h.edges[i])), repr(float(h.edges[i + 1])),
                            pop, repr(float(v))])
    return buf.getvalue()


def sweep_csv(rows: Iterable[dict]) -> str:
    buf = io.StringIO()
    fields = ["measure", "discretizer", "bins", "comparison", "feature", "fis"]
    w = csv.DictWriter(buf, fieldnames=fields, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow({k: row[k] for k in fields})
    return buf.getvalue()


def dump_json(data: dict, path: str | Path | None = None) -> str:
    text = json.dumps(data, indent=2, ensure_ascii=False, allow_nan=False) + "\n"
    if path:
        Path(path).write_text(text)
    return text


def write_text(text: str, path: str | Path | None) -> None:
    if path:
        Path(path).write_text(text)
