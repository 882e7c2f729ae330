"""
Flags shared by every subcommand
"""
import argparse

from app.core.config import settings
from app.schemas.experiment import OutputFormat


def add_common(parser: argparse.ArgumentParser, with_n: bool = True, with_reps: bool = True) -> None:
    if with_n:
        parser.add_argument("--n", type=int, help="number of vertices")
    if with_reps:
        parser.add_argument("--reps", type=int, default=1, help="independent replicates (default: 1)")
    parser.add_argument(
        "--seed",
        type=int,
        default=settings.DEFAULT_SEED,
        help=f"master seed (default: COALESCENT_SEED or {settings.DEFAULT_SEED})",
    )
    parser.add_argument(
        "--format",
        choices=[f.value for f in OutputFormat],
        default=OutputFormat.JSON.value,
        help="result format (default: json)",
    )
    parser.add_argument("--output", help="write the result to this file instead of stdout")
    parser.add_argument(
        "--check",
        action="store_true",
        help="evaluate the acceptance criterion; exit with code 2 when it fails",
    )
