from app.cli.commands.common import add_common
from app.schemas.experiment import Subcommand


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        Subcommand.INTEGRALS.value,
        help="evaluate both lambda-integrals against their closed forms",
    )
    add_common(parser, with_n=False, with_reps=False)
    parser.set_defaults(subcommand=Subcommand.INTEGRALS)
