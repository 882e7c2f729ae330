from app.cli.commands.common import add_common
from app.schemas.experiment import Subcommand


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        Subcommand.ESTIMATE_ZMC.value,
        help="estimate the first-order constant of log Z_MC(n)",
    )
    add_common(parser)
    parser.add_argument(
        "--drift-from",
        dest="drift_from",
        type=int,
        help="also estimate at this smaller n and check the estimate moves toward the constant",
    )
    parser.add_argument(
        "--decay-c",
        dest="decay_c",
        type=float,
        help="also report the fraction of samples below ln E Z_MC(n) - c n",
    )
    parser.set_defaults(subcommand=Subcommand.ESTIMATE_ZMC)
