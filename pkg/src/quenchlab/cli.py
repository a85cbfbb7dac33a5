"""
Command-line front end.

    quench-lab <scenario> --config <path> --out <dir> [--override key=value]

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys

from .config import ConfigError, apply_overrides, parse_config
from .scenarios import SCENARIOS, run_scenario

__all__ = ["main", "build_parser"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="quench-lab",
        description="Numerical laboratory for directionally quenched "
                    "Cahn-Hilliard dynamics in a channel.")
    parser.add_argument("scenario", choices=sorted(SCENARIOS),
                        help="canned experiment to run")
    parser.add_argument("--config", default=None,
                        help="INI config file (omit for defaults)")
    parser.add_argument("--out", default="out",
                        help="output directory (default: ./out)")
    parser.add_argument("--override", action="append", default=[],
                        metavar="SECTION.KEY=VALUE",
                        help="config override, repeatable")
    return parser


def _worker_count() -> int:
    raw = os.environ.get("QUENCH_LAB_THREADS", "")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
        cfg = apply_overrides(cfg, args.override)
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    try:
        manifest = run_scenario(args.scenario, cfg, args.out,
                                workers=_worker_count())
    except Exception as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    print(f"{args.scenario}: wrote {len(manifest.files)} files to {args.out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
