"""Command-line entry point.

Exit codes: 0 on success, 2 for invalid input (bad config, arguments or
files), 1 for any other failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import csv
import json
import os
import sys

from . import __version__
from .accountant import PrivacyLedger, account
from .data import generate, save_dataset
from .errors import ConfigError, NoAnsweredQueries
from .harness import (
    build_source,
    load_config,
    load_report,
    parse_override,
    resolve_key,
    run_experiment,
    run_sweep,
    save_checkpoint,
    write_report,
)

EXIT_OK, EXIT_FAILURE, EXIT_INVALID = 0, 1, 2


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="TOML or JSON experiment config")
    p.add_argument("--set", dest="overrides", action="append", default=[],
                   metavar="KEY=VALUE", help="override a dotted config key (repeatable)")
    p.add_argument("--seed", type=int, help="master seed (beats config and PROMPATE_SEED)")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="threads for teacher training and voting")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="prompate", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="write a synthetic dataset directory")
    _common(p)
    p.add_argument("--which", choices=["target", "source"], default="target")
    p.add_argument("--out", required=True)

    p = sub.add_parser("train-source", help="train and checkpoint the frozen source")
    _common(p)
    p.add_argument("--out", required=True)

    p = sub.add_parser("run", help="run one experiment and write its report")
    _common(p)
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--audit", help="write the per-query JSONL audit stream here")
    p.add_argument("--include-timing", action="store_true",
                   help="add wall_time to the report (breaks byte-stability)")

    p = sub.add_parser("sweep", help="run one experiment per value of a config field")
    _common(p)
    p.add_argument("--axis", required=True, help="dotted key or unique field name")
    p.add_argument("--values", required=True, nargs="+", help="values, parsed as TOML")
    p.add_argument("--out", required=True, help="directory for per-value reports")
    p.add_argument("--csv", help="append one row per value to this CSV")

    p = sub.add_parser("account", help="epsilon for a ledger given on the command line")
    p.add_argument("--queries", type=int, required=True, help="threshold checks")
    p.add_argument("--answered", type=int, required=True)
    p.add_argument("--sigma1", type=float, required=True)
    p.add_argument("--sigma2", type=float, required=True)
    p.add_argument("--delta", type=float, default=1e-5)
    p.add_argument("--mode", default="per-step", choices=["per-step", "paper-simple"])

    p = sub.add_parser("report", help="render figures and a summary table")
    p.add_argument("inputs", nargs="+", help="report JSON files and sweep CSV files")
    p.add_argument("--out", required=True, help="output directory")
    return parser


def _config(args):
    return load_config(args.config, args.overrides, args.seed)


def cmd_gen_data(args) -> None:
    config = _config(args)
    spec = config.target_spec() if args.which == "target" else config.source_data_spec()
    manifest = save_dataset(args.out, generate(spec), {"spec": dataclasses.asdict(spec)})
    print(json.dumps(manifest, sort_keys=True))


def cmd_train_source(args) -> None:
    config = _config(args)
    source = build_source(config)
    manifest = save_checkpoint(args.out, source, {"config": config.to_dict()["source"],
                                                  "master_seed": config.master_seed})
    print(json.dumps({"fingerprint": manifest["fingerprint"],
                      "source_accuracy": manifest["source_accuracy"]}, sort_keys=True))


def cmd_run(args) -> None:
    report = run_experiment(_config(args), args.workers, args.audit)
    write_report(report, args.out, args.include_timing)
    print(json.dumps(report.row(), sort_keys=True))


def cmd_sweep(args) -> None:
    config = _config(args)
    key = resolve_key(args.axis)
    values = [parse_override(f"v={v}")[1] for v in args.values]
    os.makedirs(args.out, exist_ok=True)
    reports = run_sweep(config, key, values, args.workers, args.csv)
    for i, (value, report) in enumerate(zip(values, reports)):
        write_report(report, os.path.join(args.out, f"{key}-{i:02d}.json"))
        print(json.dumps({"axis": key, "value": value, **report.row()}, sort_keys=True))


def cmd_account(args) -> None:
    ledger = PrivacyLedger(args.queries, args.answered, args.sigma1, args.sigma2, args.mode)
    print(json.dumps(account(ledger, args.delta), sort_keys=True))


SUMMARY_FIELDS = ("source", "axis", "value", "epsilon", "delta", "queries",
                  "answered_queries", "answer_accuracy_pct", "accuracy_mean_pct",
                  "accuracy_std_pct")


def cmd_report(args) -> None:
    from . import plotting

    os.makedirs(args.out, exist_ok=True)
    rows = []
    for path in args.inputs:
        if not os.path.exists(path):
            raise FileNotFoundError(path)
        stem = os.path.splitext(os.path.basename(path))[0]
        if path.endswith(".csv"):
            with open(path, newline="", encoding="utf-8") as fh:
                sweep = list(csv.DictReader(fh))
            if not sweep or "axis" not in sweep[0]:
                raise ConfigError(path, "not a sweep CSV")
            plotting.plot_sweep(sweep, os.path.join(args.out, f"{stem}.png"))
            rows += [{"source": path, **r} for r in sweep]
        else:
            report = load_report(path)
            plotting.plot_report(report, os.path.join(args.out, f"{stem}.png"))
            rows.append({"source": path, "axis": "", "value": "", **report})
    with open(os.path.join(args.out, "summary.csv"), "w", newline="", encoding="utf-8") as fh:
        for stream in (fh, sys.stdout):
            writer = csv.DictWriter(stream, fieldnames=SUMMARY_FIELDS, extrasaction="ignore",
                                    lineterminator="\n")
            writer.writeheader()
            writer.writerows(rows)


def is_invalid_input(exc: Exception) -> bool:
    """Validation errors and unreadable inputs, as opposed to run failures."""
    if isinstance(exc, NoAnsweredQueries):
        return False  # a valid config whose run produced nothing to learn from
    return isinstance(exc, (ValueError, FileNotFoundError, IsADirectoryError))


COMMANDS = {"gen-data": cmd_gen_data, "train-source": cmd_train_source, "run": cmd_run,
            "sweep": cmd_sweep, "account": cmd_account, "report": cmd_report}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse reports usage errors with status 2
        return int(exc.code or 0)
    if getattr(args, "workers", 1) < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_INVALID
    try:
        COMMANDS[args.command](args)
    except Exception as exc:
        if is_invalid_input(exc):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_INVALID
        print(f"failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
