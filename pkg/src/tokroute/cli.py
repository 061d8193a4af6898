"""Command-line entry point.

Four subcommands, one per experiment family:

    tokroute equivalence --config cfg.json --out results/
    tokroute memsim      --config cfg.json --out results/
    tokroute molora      --config cfg.json --out results/
    tokroute dispatch    --config cfg.json --out results/

Exit codes: 0 success, 1 assertion failure, 2 config error.
"""

import argparse
import sys

from . import bench
from .errors import ConfigError, TokrouteError

RUNNERS = {
    "equivalence": bench.run_equivalence,
    "memsim": bench.run_memory_sim,
    "molora": bench.run_molora,
    "dispatch": bench.run_dispatch_bench,
}


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tokroute",
        description="Per-token adapter routing experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, runner in RUNNERS.items():
        p = sub.add_parser(name, help=runner.__doc__.splitlines()[0].lower())
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", required=True, help="output directory for CSV reports")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        RUNNERS[args.command](args.config, args.out)
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except TokrouteError as e:
        print(f"check failed: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
