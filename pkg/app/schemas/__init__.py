"""
Pydantic schemas package
"""
from app.schemas.entropy import EntropySample
from app.schemas.experiment import ExperimentResult, ExperimentSpec, OutputFormat, Subcommand
from app.schemas.verification import VerificationCell

__all__ = [
    "EntropySample",
    "ExperimentResult",
    "ExperimentSpec",
    "OutputFormat",
    "Subcommand",
    "VerificationCell",
]
