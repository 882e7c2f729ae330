from app.cli.commands.common import add_common
from app.schemas.experiment import Subcommand


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        Subcommand.SUSCEPTIBILITY_PROFILE.value,
        help="chi(G(n, c/n))/n against alpha(c)^2",
    )
    add_common(parser)
    parser.add_argument(
        "--c",
        dest="c_values",
        type=float,
        nargs="+",
        help="mean degrees (default: 0.5 1.5 2 3)",
    )
    parser.set_defaults(subcommand=Subcommand.SUSCEPTIBILITY_PROFILE)
