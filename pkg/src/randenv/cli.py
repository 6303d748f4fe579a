"""Command-line interface: ``randenv run`` and ``randenv list-fixtures``."""

from __future__ import annotations

import argparse
import os
import sys
import traceback

from . import __version__
from .config import ACTIONS, ConfigError, load_config, parse_config
from .fixtures import ANCHORS, FIXTURES
from .stationarity import write_jsonl, write_summary_csv
from .suites import TABLE_COLUMNS, run_suite

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _epilog() -> str:
    lines = ["outputs (written to --out DIR):",
             "  report.jsonl   one JSON object per check: model, test, statistic, value, threshold,",
             "                 passed, sample_size, seed, detail",
             "  summary.csv    model, test, statistic, value, threshold, passed, sample_size, seed",
             "  <table>.csv    data for plotting; the tables and their columns are:"]
    for name, cols in TABLE_COLUMNS.items():
        lines.append(f"    {name}: {cols}")
    lines += ["",
              "actions: verify (exact or residual checks), simulate (paths), stationary",
              "(occupation measure vs the invariant law), xi (total invariant mass;",
              "DIVERGENT is a valid answer and counts as a pass).",
              "",
              "exit codes: 0 every check passed, 1 a check failed or the run crashed,",
              "2 invalid configuration."]
    return "\n".join(lines)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="randenv", description="Markov processes in random environments.",
                                epilog=_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--version", action="version", version=f"randenv {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment", epilog=_epilog(),
                         formatter_class=argparse.RawDescriptionHelpFormatter)
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", metavar="PATH", help="TOML experiment file")
    src.add_argument("--fixture", metavar="NAME", help="built-in fixture (see list-fixtures)")
    run.add_argument("--action", choices=ACTIONS, help="override the configured action")
    run.add_argument("--seed", type=_u64, help="override the seed (unsigned 64-bit)")
    run.add_argument("--threads", type=int, default=1, metavar="N",
                     help="cap on threads used by the numerical libraries (default 1)")
    run.add_argument("--out", metavar="DIR", help="output directory (overrides the configured one)")
    sub.add_parser("list-fixtures", help="print the built-in fixtures")
    return p


def _u64(text):
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def list_fixtures(out=None) -> int:
    out = out or sys.stdout
    width = max(map(len, FIXTURES))
    for name in FIXTURES:
        out.write(f"{name:<{width}}  {ANCHORS[name]}\n")
    return EXIT_OK


def run(args, out=None, err=None) -> int:
    out, err = out or sys.stdout, err or sys.stderr
    if args.threads < 1:
        err.write("error: --threads must be at least 1\n")
        return EXIT_CONFIG
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, str(args.threads))
    try:
        raw = {"schema": 1, "fixture": args.fixture} if args.fixture else load_config(args.config)
        if args.action:
            raw["action"] = args.action
        if args.seed is not None:
            raw["seed"] = args.seed
        if args.out:
            raw["output"] = args.out
        exp = parse_config(raw, FIXTURES)
    except ConfigError as exc:
        err.write(f"invalid configuration: {exc}\n")
        return EXIT_CONFIG
    except OSError as exc:
        err.write(f"cannot read configuration: {exc}\n")
        return EXIT_CONFIG
    try:
        reports, tables = run_suite(exp)
        os.makedirs(exp.output, exist_ok=True)
        with open(os.path.join(exp.output, "report.jsonl"), "w", newline="") as fh:
            write_jsonl(reports, fh)
        with open(os.path.join(exp.output, "summary.csv"), "w", newline="") as fh:
            write_summary_csv(reports, fh)
        for t in tables:
            with open(os.path.join(exp.output, f"{t.name}.csv"), "w", newline="") as fh:
                t.to_csv(fh)
    except Exception as exc:  # runtime failure: report and exit 1
        err.write(f"run failed: {type(exc).__name__}: {exc}\n")
        err.write(traceback.format_exc())
        return EXIT_FAIL
    for r in reports:
        out.write(r.line() + "\n")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_FAIL


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "list-fixtures":
        return list_fixtures()
    return run(args)


if __name__ == "__main__":
    sys.exit(main())
