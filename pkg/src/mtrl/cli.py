"""Command line: ``python -m mtrl {run,summarize,bounds,transfer} ...``.

Exit status 0 on success, 1 for a bad config, 2 when a run fails.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from .bounds import BoundInputs, evaluate_all, write_bound_rows
from .experiments import ConfigError, ExperimentConfig, emit_summary, run_experiment

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


def _run(args, transfer_only=False):
    cfg = ExperimentConfig.load(args.config)
    if transfer_only and not cfg.kind.endswith("_transfer"):
        raise ConfigError(f"kind: the transfer verb needs a *_transfer config, got {cfg.kind}")
    manifest = run_experiment(cfg, args.out)
    print(f"{cfg.kind}: {len(manifest['files'])} files, config {manifest['config_hash']}, "
          f"{manifest['wall_clock_seconds']:.1f}s")


def _summarize(args):
    rows = emit_summary(args.run_dir)
    print(f"wrote {len(rows)} summary rows to {Path(args.run_dir) / 'summary.csv'}")


def _bounds(args):
    try:
        data = json.loads(Path(args.config).read_text())
    except OSError as exc:
        raise ConfigError(f"config: cannot read {args.config}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if isinstance(data, dict) and data.get("kind") == "bounds_eval":
        data = ExperimentConfig.from_dict(data).bounds
    elif isinstance(data, dict):
        data = data.get("inputs", data)
    try:
        inputs = BoundInputs.from_dict(data)
    except TypeError as exc:
        raise ConfigError(f"bounds: {exc}") from None
    rows = evaluate_all(inputs)
    if args.out:
        write_bound_rows(rows, args.out)
    else:
        w = csv.writer(sys.stdout, lineterminator="\n")
        w.writerow(["bound", "inputs_hash", "r_star", "value"])
        for r in rows:
            w.writerow([r["bound"], r["inputs_hash"], "" if r["r_star"] is None else r["r_star"], r["value"]])


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="mtrl", description="multi-task RL experiments")
    sub = p.add_subparsers(dest="verb", required=True)
    r = sub.add_parser("run", help="run every seed of an experiment config")
    r.add_argument("config")
    r.add_argument("--out", help="output directory (default: the config's output_dir)")
    s = sub.add_parser("summarize", help="aggregate a run directory into summary.csv/json")
    s.add_argument("run_dir")
    b = sub.add_parser("bounds", help="evaluate the bound calculators on an inputs file")
    b.add_argument("config")
    b.add_argument("--out", help="CSV path (default: stdout)")
    t = sub.add_parser("transfer", help="run a transfer experiment config")
    t.add_argument("config")
    t.add_argument("--out")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "run":
            _run(args)
        elif args.verb == "transfer":
            _run(args, transfer_only=True)
        elif args.verb == "summarize":
            _summarize(args)
        else:
            _bounds(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # any failure inside a run
        print(f"run failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK
