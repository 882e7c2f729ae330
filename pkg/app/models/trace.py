from dataclasses import dataclass, field
from typing import List, Optional

from app.models.forest import MergeRecord
from app.models.kernel import KernelKind


@dataclass
class MergeTrace:
    """
    Ordered merges of one coalescent run

    `roots` holds, for oriented kernels, the root of the merged tree after each
    step; it is None for the multiplicative coalescent.
    """

    n: int
    kernel: KernelKind
    records: List[MergeRecord] = field(default_factory=list)
    roots: Optional[List[int]] = None

    @property
    def final_root(self) -> Optional[int]:
        if self.roots:
            return self.roots[-1]
        if self.n == 1 and self.kernel is not KernelKind.MULTIPLICATIVE:
            return 0
        return None

    def __repr__(self):
        return (
            f"<MergeTrace(n={self.n}, "
            f"kernel={self.kernel.value}, "
            f"merges={len(self.records)})>"
        )


@dataclass(frozen=True)
class EmpiricalLogPartition:
    """log of the empirical multiplicative partition function truncated at k"""

    n: int
    k: int
    log_z_arrow: float
    log_z: float

    def __repr__(self):
        return (
            f"<EmpiricalLogPartition(n={self.n}, k={self.k}, "
            f"log_z={self.log_z:.6f})>"
        )
