"""Command-line entry point: ``mpego {hie,gfa,run,sweep}``.

Exit codes: 0 success, 1 invalid input or configuration, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import yaml

from . import __version__
from .config import ConfigError, EvaluationConfig, resolve
from .dataset import DataError
from .discretize import METHODS
from .measures import MEASURES
from .pipeline import ablation_sweep, run
from .report import dump_json, gfa_markdown, hie_markdown, sweep_csv

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    """Usage errors are validation errors: exit 1, not argparse's default 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


def _add_data_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="YAML/JSON run config; flags override its values")
    p.add_argument("--generated", action="append", metavar="PATH",
                   help="generated samples (repeatable; NAME=PATH to set a display name)")
    p.add_argument("--reference", metavar="PATH", help="reference (training) samples")
    p.add_argument("--reference-name", help="display name of the reference set")
    p.add_argument("--baseline-generated", metavar="PATH",
                   help="second model's samples; adds its reference comparison and a head-to-head one")
    p.add_argument("--schema", metavar="PATH", help="JSON sidecar mapping column -> kind")
    p.add_argument("--tsv", action="store_true", help="inputs are tab-separated")
    p.add_argument("--drop-incomplete", action="store_true", help="skip rows with empty cells")
    p.add_argument("--subsample", type=int, metavar="N", help="draw N rows from every table")
    p.add_argument("--balance", action="store_true", help="subsample every table to the smallest size")
    p.add_argument("--seed", type=int)
    p.add_argument("--discretizer", choices=METHODS)
    p.add_argument("--bins", type=int, metavar="K")
    p.add_argument("--bin-fit", choices=("pooled", "reference"))
    p.add_argument("--out", metavar="PATH", help="JSON output path")
    p.add_argument("--markdown", metavar="PATH", help="Markdown output path")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="mpego", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"mpego {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("hie", help="hierarchical independence scores")
    _add_data_args(p)
    p.add_argument("--measure", choices=[*MEASURES, "all"])
    p.add_argument("--groups", metavar="PATH", help="JSON/YAML mapping group name -> feature list")
    p.add_argument("--histograms", metavar="PATH", help="write density histograms as CSV")
    p.add_argument("--bins-out", metavar="PATH", help="write the fitted strata as JSON")

    p = sub.add_parser("gfa", help="generation frequency analysis (subset scanning)")
    _add_data_args(p)
    p.add_argument("--direction", choices=("over", "under"))
    p.add_argument("--restarts", type=int)
    p.add_argument("--permutations", type=int)
    p.add_argument("--min-size", type=int)

    p = sub.add_parser("run", help="run the analyses named in a config file")
    _add_data_args(p)

    p = sub.add_parser("sweep", help="ablation over measures, discretizers and bin counts")
    _add_data_args(p)
    p.add_argument("--axes", required=True, help="comma list from: measures,discretizers,bins")
    p.add_argument("--csv", metavar="PATH", help="long-format FIS table output")
    return parser


def _load_raw(path: str | None) -> tuple[dict, Path | None]:
    if not path:
        return {}, None
    try:
        with open(path) as fh:
            raw = yaml.safe_load(fh) or {}
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError([f"cannot load config {path}: {exc}"]) from exc
    if not isinstance(raw, dict):
        raise ConfigError([f"{path}: config must be a mapping"])
    return raw, Path(path).parent


def _named(spec: str) -> tuple[str, str]:
    if "=" in spec:
        name, path = spec.split("=", 1)
        return name, path
    return Path(spec).stem, spec


def config_from_args(args: argparse.Namespace) -> EvaluationConfig:
    raw, base = _load_raw(args.config)
    # config-relative paths resolve against the config; flag paths stay as given
    if base is not None:
        raw = resolve(raw, base_dir=base, check_files=False).to_dict()
    raw.setdefault("hie", {})
    raw.setdefault("gfa", {})
    raw.setdefault("output", {})

    if args.generated:
        raw["generated"] = dict(_named(g) for g in args.generated)
    if args.baseline_generated:
        gen = dict(raw.get("generated") or {})
        name, path = _named(args.baseline_generated)
        gen[name] = path
        raw["generated"] = gen
        raw["head_to_head"] = True
    for flag, key in (("reference", "reference"), ("reference_name", "reference_name"),
                      ("schema", "schema"), ("subsample", "subsample"), ("seed", "seed")):
        if getattr(args, flag) is not None:
            raw[key] = getattr(args, flag)
    if args.tsv:
        raw["delimiter"] = "\t"
    if args.drop_incomplete:
        raw["drop_incomplete"] = True
    if args.balance:
        raw["balance"] = True
    for flag, key in (("discretizer", "discretizer"), ("bins", "bins"), ("bin_fit", "bin_fit")):
        if getattr(args, flag) is not None:
            raw["hie"][key] = getattr(args, flag)
    if args.out:
        raw["output"]["json"] = args.out
    if args.markdown:
        raw["output"]["markdown"] = args.markdown

    cmd = args.command
    if cmd == "hie":
        raw["gfa"]["enabled"] = False
        raw["hie"]["enabled"] = True
        if args.measure:
            raw["hie"]["measure"] = args.measure
        if args.groups:
            groups, _ = _load_raw(args.groups)
            raw["hie"]["groups"] = groups
        if args.histograms:
            raw["output"]["histograms"] = args.histograms
        if args.bins_out:
            raw["output"]["bins"] = args.bins_out
    elif cmd == "gfa":
        raw["hie"]["enabled"] = False
        raw["gfa"]["enabled"] = True
        for flag, key in (("direction", "direction"), ("restarts", "restarts"),
                          ("permutations", "permutations"), ("min_size", "min_size")):
            if getattr(args, flag) is not None:
                raw["gfa"][key] = getattr(args, flag)
    elif cmd == "sweep" and args.csv:
        raw["output"]["sweep"] = args.csv
    return resolve(raw)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = config_from_args(args)
        if args.command == "sweep":
            axes = [a.strip() for a in args.axes.split(",") if a.strip()]
            _, rows = ablation_sweep(cfg, axes)
            if not cfg.output.get("sweep"):
                sys.stdout.write(sweep_csv(rows))
            return EXIT_OK
        report = run(cfg)
    except (ConfigError, DataError) as exc:
        print(f"mpego: error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except ValueError as exc:
        print(f"mpego: error: {exc}", file=sys.stderr)
        return EXIT_INVALID if args.command == "sweep" else EXIT_RUNTIME
    except Exception as exc:  # noqa: BLE001 - report any failure with a non-zero exit
        print(f"mpego: runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME

    if not cfg.output.get("json"):
        sys.stdout.write(dump_json(report.to_dict()))
    elif not cfg.output.get("markdown"):
        if report.hie:
            print(hie_markdown([r for r in report.hie if r.config.measure == report.hie[0].config.measure]))
        if report.gfa:
            print(gfa_markdown(report.gfa))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
