from app.cli.commands.common import add_common
from app.schemas.experiment import Subcommand


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        Subcommand.ESTIMATE_FRIEZE.value,
        help="mean minimum spanning tree weight of K_n with uniform weights",
    )
    add_common(parser)
    parser.set_defaults(subcommand=Subcommand.ESTIMATE_FRIEZE)
