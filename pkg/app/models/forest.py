from dataclasses import dataclass, field
from typing import List, Optional, Tuple


@dataclass
class Forest:
    """
    Union-find forest over vertices 0..n-1

    `size` and `tree_root` are only meaningful at representatives. Edge i in
    `edges` carries the addition label i + 1.
    """

    n: int
    parent: List[int]
    size: List[int]
    tree_root: List[int]
    sum_sq: int
    edges: List[Tuple[int, int]] = field(default_factory=list)
    component_count: int = 0

    def __repr__(self):
        return (
            f"<Forest(n={self.n}, "
            f"components={self.component_count}, "
            f"sum_sq={self.sum_sq})>"
        )


@dataclass
class RootedTree:
    """Rooted tree given by parent links; parent[root] is None"""

    n: int
    parent: List[Optional[int]]
    root: int

    def __repr__(self):
        return f"<RootedTree(n={self.n}, root={self.root})>"


@dataclass(frozen=True)
class MergeRecord:
    """
    One merge of a coalescent run

    `u` keeps its root when the kernel orients edges (u becomes the parent of v).
    `choices` is the number of admissible choices at this step, 0 when the step
    was not drawn uniformly.
    """

    step: int
    u: int
    v: int
    size_a: int
    size_b: int
    pre_sum_sq: int
    choices: int = 0

    def __repr__(self):
        return (
            f"<MergeRecord(step={self.step}, u={self.u}, v={self.v}, "
            f"sizes=({self.size_a},{self.size_b}), pre_sum_sq={self.pre_sum_sq})>"
        )
