from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union
from fractions import Fraction

Weight = Union[float, Fraction, int]


@dataclass
class WeightedRun:
    """
    Kruskal's scan over K_n in increasing weight order

    `weights[m]` is X_{m+1}, the weight of the (m+1)-th edge examined, and
    `accepted[m]` records whether that edge joined two components.
    """

    n: int
    distribution: str
    weights: List[Weight] = field(default_factory=list)
    edges: List[Tuple[int, int]] = field(default_factory=list)
    accepted: List[bool] = field(default_factory=list)
    mst_edges: List[Tuple[int, int, Weight]] = field(default_factory=list)
    total_weight: Weight = 0
    seed: Optional[int] = None

    def __repr__(self):
        return (
            f"<WeightedRun(n={self.n}, distribution={self.distribution}, "
            f"examined={len(self.weights)}, total_weight={float(self.total_weight):.6f})>"
        )
