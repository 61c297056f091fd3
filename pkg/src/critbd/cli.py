"""Command-line experiment runner.

One subcommand per experiment plus `report` for merging saved records.
Exit codes: 0 success, 2 invalid config, 3 success with resource-cap
partial results (censored or aborted replicates; see the counters).
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace

from . import experiments
from .experiments import ConfigError


def _add_common(sub):
    sub.add_argument("--config", help="flat key=value config file")
    sub.add_argument("--seed", type=int, help="master seed (overrides config)")
    sub.add_argument("--out", help="output path (overrides config)")
    sub.add_argument("--format", choices=("csv", "json"), help="output format")
    sub.add_argument("--workers", type=int, default=1, help="parallel workers")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="critbd",
        description="Critical birth-death chain experiments: exact simulation, "
        "renewal solver, heavy-tail diagnostics.",
    )
    subs = parser.add_subparsers(dest="command", required=True)
    for name in experiments.EXPERIMENTS:
        sub = subs.add_parser(name, help=f"run the {name} experiment")
        _add_common(sub)
    rep = subs.add_parser("report", help="merge saved JSON records into one table")
    rep.add_argument("records", nargs="+", help="record JSON files")
    rep.add_argument("--out", help="write the summary CSV here (default: stdout)")
    return parser


def _load_config(args) -> experiments.ExperimentConfig:
    if args.config:
        with open(args.config) as fh:
            cfg = experiments.parse_config(fh.read(), experiment=args.command)
    else:
        cfg = experiments.default_config(args.command)
    updates = {}
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.out is not None:
        updates["out"] = args.out
    if args.format is not None:
        updates["format"] = args.format
    return replace(cfg, **updates) if updates else cfg


def _run_report(args) -> int:
    records = [experiments.load_record(p) for p in args.records]
    table = experiments.report(records)
    text = ",".join(table["header"]) + "\n"
    for row in table["rows"]:
        text += ",".join(experiments.format_number(x) for x in row) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "report":
            return _run_report(args)
        cfg = _load_config(args)
        record = experiments.run(cfg, workers=args.workers)
    except (ConfigError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    paths = experiments.output_paths(record.config)
    counters = " ".join(f"{k}={v}" for k, v in sorted(record.counters.items()))
    print(
        f"{cfg.experiment}: wrote {', '.join(paths)} "
        f"({record.wall_clock:.2f}s{' ' + counters if counters else ''})",
        file=sys.stderr,
    )
    return 3 if record.partial else 0


if __name__ == "__main__":
    sys.exit(main())
