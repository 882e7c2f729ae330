import argparse
import sys
from typing import List, Optional

from pydantic import ValidationError

from app.cli.commands import COMMANDS
from app.core.config import settings
from app.core.exceptions import EXIT_OK, EXIT_USAGE, AcceptanceFailure, CoalescentError
from app.core.log_config import configure_logging
from app.schemas.experiment import ExperimentSpec
from app.services import experiments, export


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with code 1"""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> CliParser:
    parser = CliParser(
        prog="coalescent-lab",
        description="Coalescent, random graph and minimum spanning tree experiments",
    )
    parser.add_argument(
        "--log-level",
        dest="log_level",
        default=settings.LOG_LEVEL,
        help=f"logging level (default: COALESCENT_LOG_LEVEL or {settings.LOG_LEVEL})",
    )
    parser.add_argument(
        "--workers",
        type=int,
        default=settings.WORKERS,
        help=f"replicate worker processes (default: COALESCENT_WORKERS or {settings.WORKERS})",
    )
    subparsers = parser.add_subparsers(dest="command", metavar="command")
    subparsers.required = True
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.log_level)

    fields = {k: v for k, v in vars(args).items() if k in ExperimentSpec.model_fields and v is not None}
    try:
        spec = ExperimentSpec(**fields)
    except ValidationError as e:
        print(f"error[usage]: {e}", file=sys.stderr)
        return EXIT_USAGE

    try:
        result = experiments.run(spec)
    except CoalescentError as e:
        print(f"error[{e.code}]: {e.detail}", file=sys.stderr)
        return e.exit_code

    export.write(export.render(result, spec.format), spec.output)
    if result.passed is False:
        failure = AcceptanceFailure(f"{spec.subcommand.value} did not meet its acceptance criterion")
        print(f"error[{failure.code}]: {failure.detail}", file=sys.stderr)
        return failure.exit_code
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
