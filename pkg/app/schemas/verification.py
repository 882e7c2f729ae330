from typing import Optional

from pydantic import BaseModel, Field

from app.models.kernel import KernelKind


class VerificationCell(BaseModel):
    """One (kernel, n, k) entry of the exact partition-function cross-check"""
    kernel: KernelKind
    n: int
    k: int
    brute_force: Optional[int] = Field(None, description="Labeled chain enumeration, small n only")
    dynamic_programming: int
    closed_form: int
    passed: bool
