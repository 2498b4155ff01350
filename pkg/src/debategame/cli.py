"""Command-line entry point for debate-game sweeps.

Subcommands compute payoff tables, time curves, equilibria, cooperative
dilemmas, harmony indices, and raw simulation ensembles over a parameter
grid, writing CSV files plus a manifest into the output directory.

Exit codes: 0 success, 2 configuration error, 3 capacity error (exact
computations beyond n = 3).
"""

from __future__ import annotations

import argparse
import sys

from .markov import CapacityError
from .sweep import COMMANDS, ConfigError, SweepConfig, run_command


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="debategame",
        description="Dialectical debate games: exact solving, simulation, and strategic analysis.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("payoffs", "expected payoff/accuracy/obstinacy/consensus tables"),
        ("curves", "collective accuracy and consensus over debate rounds"),
        ("equilibria", "pure and mixed Nash equilibria with selection"),
        ("dilemmas", "cooperate-defect pairs and dilemma classification"),
        ("harmony", "payoff correlation over the dominance-reduced game"),
        ("simulate", "Monte Carlo ensemble statistics per strategy profile"),
    ):
        cmd = sub.add_parser(name, help=help_text)
        cmd.add_argument("--config", metavar="PATH", help="JSON sweep configuration file")
        cmd.add_argument("--out", metavar="DIR", default="out", help="output directory (default: %(default)s)")
        cmd.add_argument("--seed", type=int, metavar="U64", help="override the ensemble seed")
        cmd.add_argument("--workers", type=int, metavar="N", help="override the worker count")
        cmd.add_argument("--backend", choices=("exact", "sim"), help="override the backend")
        cmd.add_argument("--samples", type=int, metavar="N", help="override debates per ensemble")
        cmd.add_argument("--max-support", type=int, metavar="K", dest="max_support",
                         help="override the mixed-equilibrium support bound")
        cmd.add_argument("--include-dominated", action="store_true", default=None,
                         help="search mixed equilibria on the unreduced game")
    return parser


def resolve_config(args: argparse.Namespace) -> SweepConfig:
    config = SweepConfig.load(args.config) if args.config else SweepConfig()
    overrides = {}
    for name in ("seed", "workers", "backend", "samples", "max_support", "include_dominated"):
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if overrides:
        data = config.to_dict()
        data.update(overrides)
        config = SweepConfig.from_dict(data)
    else:
        config.validate()
    return config


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = resolve_config(args)
        paths = run_command(args.command, config, args.out)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except CapacityError as exc:
        print(f"capacity error: {exc}", file=sys.stderr)
        return 3
    for path in paths:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
