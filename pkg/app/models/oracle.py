from dataclasses import dataclass
from typing import Tuple


@dataclass(frozen=True)
class ChainWeightState:
    """
    Shape of a partition (block sizes, descending) and the summed chain weight reaching it

    The weight is an int for the integer-valued kernels.
    """

    shape: Tuple[int, ...]
    weight: int

    def __repr__(self):
        return f"<ChainWeightState(shape={self.shape}, weight={self.weight})>"
