"""Command-line experiment runner.

Usage: cec-bench run <config-path> [--out DIR] [--seed N] [--trials N]
[--figure TAG]. Exit codes: 0 success, 1 config validation error, 2 runtime
error while building figures.
"""
from __future__ import annotations

import argparse
import sys

from .config import FIGURE_TAGS, ConfigError, validate_config
from .figures import run_experiment, summarize

__all__ = ["main"]


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cec-bench",
        description="Reproduce the loop-efficiency, latency, and reliability sweeps as CSV datasets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("config", help="path to the INI experiment config")
    run.add_argument("--out", help="output directory (overrides the config)")
    run.add_argument("--seed", type=int, help="master seed (overrides the config)")
    run.add_argument("--trials", type=int, help="Monte-Carlo trial count (overrides the config)")
    run.add_argument(
        "--figure",
        choices=FIGURE_TAGS,
        help="build only this figure (overrides the config list)",
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = validate_config(args.config)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1

    if args.out is not None:
        cfg.out_dir = args.out
    if args.seed is not None:
        cfg.seed = args.seed
    if args.trials is not None:
        if args.trials < 1:
            print("error: --trials must be >= 1", file=sys.stderr)
            return 1
        cfg.trials = args.trials
    if args.figure is not None:
        cfg.figures = (args.figure,)

    for line in cfg.applied_defaults:
        print(f"default applied: {line}")

    try:
        datasets = run_experiment(cfg)
    except RuntimeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2

    print(f"wrote {len(datasets)} dataset(s) to {cfg.out_dir}")
    for tag in cfg.figures:
        for line in summarize(datasets[tag]):
            print(line)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
