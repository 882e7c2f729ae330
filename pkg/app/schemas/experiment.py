from enum import Enum
from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field, field_validator

from app.core.config import settings
from app.core.streams import SEED_LIMIT
from app.models.kernel import KernelKind


class Subcommand(str, Enum):
    SIMULATE = "simulate"
    VERIFY_EXACT = "verify-exact"
    ESTIMATE_FRIEZE = "estimate-frieze"
    ESTIMATE_ZMC = "estimate-zmc"
    SUSCEPTIBILITY_PROFILE = "susceptibility-profile"
    INTEGRALS = "integrals"
    HEIGHTS = "heights"


class OutputFormat(str, Enum):
    JSON = "json"
    CSV = "csv"


class ExperimentSpec(BaseModel):
    """Everything needed to reproduce one CLI invocation"""
    subcommand: Subcommand = Field(..., description="Experiment to run")
    n: Optional[int] = Field(None, description="Number of vertices")
    reps: int = Field(default=1, description="Number of independent replicates")
    seed: int = Field(default=settings.DEFAULT_SEED, description="Master seed, 64-bit")
    format: OutputFormat = Field(default=OutputFormat.JSON, description="Result file format")
    output: Optional[str] = Field(None, description="Write the result here instead of stdout")
    record_every: int = Field(default=settings.RECORD_EVERY, description="Trajectory thinning factor")
    workers: Optional[int] = Field(None, exclude=True, description="Replicate worker processes; never serialized")
    kind: Optional[str] = Field(None, description="simulate: kingman, additive, multiplicative or graph")
    kernel: Optional[KernelKind] = Field(None, description="heights: which coalescent")
    n_max: Optional[int] = Field(None, description="verify-exact: largest n checked")
    c_values: Optional[List[float]] = Field(None, description="susceptibility-profile: mean degrees")
    drift_from: Optional[int] = Field(None, description="estimate-zmc: smaller n for the drift check")
    decay_c: Optional[float] = Field(None, description="estimate-zmc: margin c of the exponential-decay check")
    check: bool = Field(default=False, description="Evaluate the acceptance criterion and fail with exit code 2")

    @field_validator('n', 'n_max', 'drift_from')
    @classmethod
    def validate_size(cls, v: Optional[int]) -> Optional[int]:
        """Sizes are positive"""
        if v is not None and v < 1:
            raise ValueError('n must be at least 1')
        return v

    @field_validator('reps', 'record_every')
    @classmethod
    def validate_positive(cls, v: int) -> int:
        if v < 1:
            raise ValueError('must be at least 1')
        return v

    @field_validator('seed')
    @classmethod
    def validate_seed(cls, v: int) -> int:
        """Seeds are unsigned 64-bit integers"""
        if not 0 <= v < SEED_LIMIT:
            raise ValueError('seed must lie in [0, 2**64)')
        return v

    @field_validator('workers')
    @classmethod
    def validate_workers(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and v < 1:
            raise ValueError('workers must be at least 1')
        return v

    @field_validator('kind')
    @classmethod
    def validate_kind(cls, v: Optional[str]) -> Optional[str]:
        if v is None:
            return v
        allowed = [k.value for k in KernelKind] + ["graph"]
        if v not in allowed:
            raise ValueError(f"kind must be one of {', '.join(allowed)}")
        return v


class ExperimentResult(BaseModel):
    """Output of one experiment; identical specs give identical results apart from `elapsed`"""
    subcommand: Subcommand
    estimates: Dict[str, Any] = Field(default_factory=dict, description="Point estimates and reference values")
    stderr: Optional[float] = Field(None, description="Standard error of the main estimate")
    reps: int
    seed: int
    generator_id: str = Field(default=settings.GENERATOR_ID, description="Random generator and seed derivation")
    passed: Optional[bool] = Field(None, description="Outcome of the acceptance check, when there is one")
    table: Optional[List[Dict[str, Any]]] = Field(None, description="Row-level output for CSV export")
    spec: ExperimentSpec
    elapsed: float = Field(default=0.0, description="Wall-clock seconds")
