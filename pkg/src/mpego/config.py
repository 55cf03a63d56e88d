"""Run configuration: a YAML (or JSON) document resolved against defaults.

Example::

    generated:
      GCPN: gcpn.csv
      GraphAF: graphaf.csv
    reference: zinc.csv
    reference_name: ZINC
    head_to_head: true
    subsample: 10000
    seed: 17
    hie:
      measure: yules-y
      discretizer: equal-frequency
      bins: 5
      groups:
        QED+LogP: [QED, LogP]
    gfa:
      direction: over
      restarts: 10
      permutations: 99
    output:
      json: report.json
      markdown: report.md
"""
from __future__ import annotations

import copy
import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Mapping

import yaml

from .discretize import DEFAULT_BINS, DEFAULT_METHOD, METHODS
from .gfa import DEFAULT_PERMUTATIONS, DEFAULT_RESTARTS
from .hie import HieConfig
from .measures import DEFAULT_MEASURE, MEASURES
from .scanstat import DIRECTIONS, Q_MAX, Q_MIN


class ConfigError(ValueError):
    def __init__(self, problems: list[str]):
        self.problems = list(problems)
        super().__init__("invalid configuration:\n  - " + "\n  - ".join(self.problems))


DEFAULTS: dict[str, Any] = {
    "generated": {},
    "reference": None,
    "reference_name": "reference",
    "head_to_head": False,
    "schema": None,
    "delimiter": ",",
    "drop_incomplete": False,
    "subsample": None,
    "balance": False,
    "seed": 0,
    "hie": {
        "enabled": True,
        "measure": DEFAULT_MEASURE,
        "discretizer": DEFAULT_METHOD,
        "bins": DEFAULT_BINS,
        "bin_fit": "pooled",
        "sis_weights": "uniform",
        "fis_weights": "uniform",
        "groups": {},
    },
    "gfa": {
        "enabled": True,
        "direction": "over",
        "restarts": DEFAULT_RESTARTS,
        "permutations": DEFAULT_PERMUTATIONS,
        "min_size": 1,
        "q_min": Q_MIN,
        "q_max": Q_MAX,
    },
    "sweep": {
        "measures": list(MEASURES),
        "discretizers": list(METHODS),
        "bins": [3, 5, 10],
    },
    "output": {
        "json": None,
        "markdown": None,
        "histograms": None,
        "bins": None,
        "sweep": None,
        "histogram_bins": 50,
    },
}


@dataclass
class EvaluationConfig:
    generated: dict[str, str]
    reference: str
    reference_name: str = "reference"
    head_to_head: bool = False
    schema: str | None = None
    delimiter: str = ","
    drop_incomplete: bool = False
    subsample: int | None = None
    balance: bool = False
    seed: int = 0
    hie: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["hie"]))
    gfa: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["gfa"]))
    sweep: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["sweep"]))
    output: dict = field(default_factory=lambda: copy.deepcopy(DEFAULTS["output"]))

    def measures(self) -> list[str]:
        m = self.hie["measure"]
        if m == "all":
            return list(MEASURES)
        return [m] if isinstance(m, str) else list(m)

    def hie_config(self, measure: str | None = None, discretizer: str | None = None,
                   bins: int | None = None) -> HieConfig:
        h = self.hie
        return HieConfig(
            measure=measure or self.measures()[0],
            discretizer=discretizer or h["discretizer"],
            bins=int(bins or h["bins"]),
            bin_fit=h["bin_fit"],
            sis_weights=h["sis_weights"],
            fis_weights=h["fis_weights"],
            groups={k: list(v) for k, v in (h["groups"] or {}).items()},
            seed=self.seed,
        )

    def to_dict(self) -> dict:
        return {
            "generated": dict(self.generated),
            "reference": self.reference,
            "reference_name": self.reference_name,
            "head_to_head": self.head_to_head,
            "schema": self.schema,
            "delimiter": self.delimiter,
            "drop_incomplete": self.drop_incomplete,
            "subsample": self.subsample,
            "balance": self.balance,
            "seed": self.seed,
            "hie": copy.deepcopy(self.hie),
            "gfa": copy.deepcopy(self.gfa),
            "sweep": copy.deepcopy(self.sweep),
            "output": copy.deepcopy(self.output),
        }


def _merge(base: dict, override: Mapping) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, Mapping) and isinstance(out.get(k), dict) and k != "groups":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _normalize_generated(value, problems: list[str]) -> dict[str, str]:
    if value is None:
        return {}
    if isinstance(value, str):
        return {Path(value).stem: value}
    if isinstance(value, Mapping):
        return {str(k): str(v) for k, v in value.items()}
    if isinstance(value, list):
        out = {}
        for item in value:
            if isinstance(item, str):
                out[Path(item).stem] = item
            elif isinstance(item, Mapping) and "path" in item:
                out[str(item.get("name", Path(item["path"]).stem))] = str(item["path"])
            else:
                problems.append(f"cannot interpret generated entry {item!r}")
        return out
    problems.append(f"'generated' must be a path, list or mapping, got {type(value).__name__}")
    return {}


def _header(path: str, delimiter: str) -> list[str] | None:
    try:
        with open(path, newline="") as fh:
            row = next(csv.reader(fh, delimiter=delimiter), None)
    except OSError:
        return None
    return [c.strip() for c in row] if row else None


def resolve(raw: Mapping | None, base_dir: str | Path | None = None,
            check_files: bool = True) -> EvaluationConfig:
    """Fill defaults, resolve relative paths and collect every problem found."""
    problems: list[str] = []
    raw = dict(raw or {})
    unknown = sorted(set(raw) - set(DEFAULTS))
    if unknown:
        problems.append(f"unknown top-level keys: {unknown}")
        raw = {k: v for k, v in raw.items() if k in DEFAULTS}
    merged = _merge(DEFAULTS, raw)

    def rel(p):
        if p is None or base_dir is None or Path(p).is_absolute():
            return p
        return str(Path(base_dir) / p)

    generated = {k: rel(v) for k, v in _normalize_generated(merged["generated"], problems).items()}
    reference = rel(merged["reference"])
    schema = rel(merged["schema"])
    if not generated:
        problems.append("at least one generated dataset is required")
    if not reference:
        problems.append("a reference dataset is required")
    if check_files:
        for label, path in [*(("generated " + k, v) for k, v in generated.items()),
                            ("reference", reference), ("schema", schema)]:
            if path and not Path(path).is_file():
                problems.append(f"{label} file not found: {path}")

    hie, gfa = merged["hie"], merged["gfa"]
    if not hie.get("enabled", True) and not gfa.get("enabled", True):
        problems.append("nothing to do: both hie and gfa are disabled")

    measures = hie["measure"]
    names = list(MEASURES) if measures == "all" else ([measures] if isinstance(measures, str) else list(measures))
    for m in names:
        if m not in MEASURES:
            problems.append(f"unknown measure {m!r}; valid measures: {', '.join(MEASURES)}")
    if hie["discretizer"] not in METHODS:
        problems.append(f"unknown discretizer {hie['discretizer']!r}; valid: {', '.join(METHODS)}")
    if not isinstance(hie["bins"], int) or hie["bins"] < 2:
        problems.append(f"bins must be an integer >= 2, got {hie['bins']!r}")
    if hie["bin_fit"] not in ("pooled", "reference"):
        problems.append(f"bin_fit must be 'pooled' or 'reference', got {hie['bin_fit']!r}")
    if hie["sis_weights"] not in ("uniform", "support-weighted"):
        problems.append(f"sis_weights must be 'uniform' or 'support-weighted', got {hie['sis_weights']!r}")
    if not (hie["fis_weights"] == "uniform" or isinstance(hie["fis_weights"], Mapping)):
        problems.append("fis_weights must be 'uniform' or a mapping feature -> weight")

    groups = hie.get("groups") or {}
    columns = _header(reference, merged["delimiter"]) if reference and check_files else None
    if not isinstance(groups, Mapping):
        problems.append("hie.groups must map group names to feature lists")
    else:
        for gname, members in groups.items():
            if not isinstance(members, list) or not members or not all(isinstance(m, str) for m in members):
                problems.append(f"group {gname!r} must be a non-empty list of feature names")
                continue
            if columns is not None:
                absent = [m for m in members if m not in columns]
                if absent:
                    problems.append(f"group {gname!r} references absent features {absent}")
                elif set(members) >= set(columns):
                    problems.append(f"group {gname!r} selects every feature; that is the global score")

    if gfa["direction"] not in DIRECTIONS:
        problems.append(f"gfa.direction must be one of {DIRECTIONS}, got {gfa['direction']!r}")
    for key, lo in (("restarts", 1), ("permutations", 0), ("min_size", 1)):
        if not isinstance(gfa[key], int) or gfa[key] < lo:
            problems.append(f"gfa.{key} must be an integer >= {lo}, got {gfa[key]!r}")
    if merged["subsample"] is not None and (not isinstance(merged["subsample"], int) or merged["subsample"] < 1):
        problems.append(f"subsample must be a positive integer, got {merged['subsample']!r}")
    if not isinstance(merged["seed"], int):
        problems.append(f"seed must be an integer, got {merged['seed']!r}")

    for m in merged["sweep"].get("measures", []):
        if m not in MEASURES:
            problems.append(f"unknown sweep measure {m!r}; valid measures: {', '.join(MEASURES)}")
    for d in merged["sweep"].get("discretizers", []):
        if d not in METHODS:
            problems.append(f"unknown sweep discretizer {d!r}; valid: {', '.join(METHODS)}")

    if problems:
        raise ConfigError(problems)

    out = merged["output"]
    out = {k: (rel(v) if k != "histogram_bins" else v) for k, v in out.items()}
    return EvaluationConfig(
        generated=generated,
        reference=reference,
        reference_name=str(merged["reference_name"]),
        head_to_head=bool(merged["head_to_head"]),
        schema=schema,
        delimiter=merged["delimiter"],
        drop_incomplete=bool(merged["drop_incomplete"]),
        subsample=merged["subsample"],
        balance=bool(merged["balance"]),
        seed=merged["seed"],
        hie=hie,
        gfa=gfa,
        sweep=merged["sweep"],
        output=out,
    )


def validate_config(path: str | Path) -> EvaluationConfig:
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh)
    except OSError as exc:
        raise ConfigError([f"cannot read config {path}: {exc}"]) from exc
    except yaml.YAMLError as exc:
        raise ConfigError([f"cannot parse config {path}: {exc}"]) from exc
    if raw is not None and not isinstance(raw, Mapping):
        raise ConfigError([f"{path}: config must be a mapping"])
    return resolve(raw, base_dir=Path(path).parent)
