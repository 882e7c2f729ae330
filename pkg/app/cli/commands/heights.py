from app.cli.commands.common import add_common
from app.models.kernel import KernelKind
from app.schemas.experiment import Subcommand


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        Subcommand.HEIGHTS.value,
        help="heights and depth of vertex 1 in the final coalescent tree",
    )
    add_common(parser)
    parser.add_argument(
        "--kernel",
        choices=[k.value for k in KernelKind],
        required=True,
        help="which coalescent",
    )
    parser.set_defaults(subcommand=Subcommand.HEIGHTS)
