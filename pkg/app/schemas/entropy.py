from typing import Optional

from pydantic import BaseModel, Field


class EntropySample(BaseModel):
    """One realization of log Z_MC(n) with both normalizations and its audit sums"""
    n: int
    seed: Optional[int] = None
    replicate: Optional[int] = None
    log_z: float = Field(..., description="log of 2^-(n-1) prod (n^2 - S_k)")
    log_z_arrow: float = Field(..., description="log of prod (n^2 - S_k)")
    normalized: float = Field(..., description="(log_z - 2n ln n) / n, tends to zeta_mc")
    normalized_identity: float = Field(..., description="(log_z_arrow - 2(n-1) ln n) / n, tends to zeta_mc + ln 2")
    chain_log_sum: float = Field(..., description="sum over the chain of ln(1 - chi(F_k)/n)")
    process_log_sum: float = Field(..., description="sum over joining steps of ln(1 - chi(G_m)/n)")
