from app.cli.commands.common import add_common
from app.schemas.experiment import Subcommand


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        Subcommand.VERIFY_EXACT.value,
        help="cross-check partition functions by enumeration, DP and closed form",
    )
    add_common(parser, with_n=False, with_reps=False)
    parser.add_argument("--n-max", dest="n_max", type=int, default=6, help="largest n checked (default: 6)")
    parser.set_defaults(subcommand=Subcommand.VERIFY_EXACT)
