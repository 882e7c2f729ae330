from app.cli.commands.common import add_common
from app.core.config import settings
from app.models.kernel import KernelKind
from app.schemas.experiment import Subcommand


def register(subparsers) -> None:
    parser = subparsers.add_parser(
        Subcommand.SIMULATE.value,
        help="run one coalescent or graph process and export its trace",
        description="Run one uniform coalescent (trace CSV columns step,u,v,size_a,size_b,pre_sum_sq) "
        "or one graph process up to connectivity (trajectory columns m,tau,chi_num,L,S).",
    )
    add_common(parser, with_reps=False)
    parser.add_argument(
        "--kind",
        choices=[k.value for k in KernelKind] + ["graph"],
        default=KernelKind.MULTIPLICATIVE.value,
        help="process to simulate (default: multiplicative)",
    )
    parser.add_argument(
        "--record-every",
        dest="record_every",
        type=int,
        default=settings.RECORD_EVERY,
        help="keep every k-th trajectory row (default: COALESCENT_RECORD_EVERY or 1)",
    )
    parser.set_defaults(subcommand=Subcommand.SIMULATE)
