"""
The `occflow` command line.
"""
import sys
import argparse
import logging
from typing import List, Optional
from occflow import logs
from occflow.enums import Ablation
from occflow.exceptions import OccflowError
from occflow.runners import COMMANDS


logger = logging.getLogger(__name__)


def non_negative(value: str) -> int:
    number = int(value)

    if number < 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative integer, got {value}")

    return number


def build_parser() -> argparse.ArgumentParser:
    """
    Build the parser of every registered subcommand.

    :return: argparse.ArgumentParser

    """

    parser = argparse.ArgumentParser(prog="occflow", description="Self-supervised occupancy and flow on voxel grids.")
    subparsers = parser.add_subparsers(dest="command", metavar="COMMAND")
    subparsers.required = True

    for command in COMMANDS.commands:
        sub = subparsers.add_parser(command.name, help=command.help, description=command.help)
        sub.add_argument("--seed", type=non_negative, default=None, help="random seed (overrides the config)")
        sub.add_argument("--threads", type=non_negative, default=None, help="torch intra-op threads")
        sub.add_argument("--out", default=None, help="output directory (overrides the config)")
        sub.set_defaults(schema=command.schema)

        if command.schema is not None:
            sub.add_argument("--config", required=True, help="experiment file")
            sub.add_argument(
                "--ablate",
                action="append",
                default=[],
                choices=[a.value for a in Ablation],
                help="ablation switch (repeatable)",
            )

        if command.name == "validate":
            sub.add_argument("--explain", action="store_true", help="list every key with its default and meaning")

        if command.name == "compare":
            sub.add_argument("reports", nargs="+", help="metrics.csv files, the first one being the reference")
        elif command.name == "gradcheck":
            sub.add_argument("--count", type=non_negative, default=100, help="number of compared grid parameters")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """
    Run a subcommand and translate errors into exit codes.

    :param argv: Optional[List[str]], Arguments (defaults to `sys.argv[1:]`).
    :return: int, 0 on success, 2 for configuration and artifact errors, 3 for numerical
        failures.

    """

    logs.configure()
    args = build_parser().parse_args(argv)

    try:
        return COMMANDS.lookup(args.command)(args)
    except OccflowError as e:
        logger.error(str(e))
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
