from dataclasses import dataclass, field
from typing import Dict, List, Optional, Set

import numpy as np


@dataclass
class GraphProcessRun:
    """
    One run of the Erdos-Renyi graph process, streamed statistics per edge count m

    chi_num, tau, largest and second have length steps + 1 (m = 0 is the empty
    graph); the edge arrays and `joined` have length steps. `joined[m]` says whether edge m + 1 joined two components. `coupling_times[k]` is
    the first m at which k components have been joined, so coupling_times[0] = 0.
    """

    n: int
    steps: int
    edge_u: np.ndarray
    edge_v: np.ndarray
    joined: np.ndarray
    chi_num: np.ndarray
    tau: np.ndarray
    largest: np.ndarray
    second: np.ndarray
    coupling_times: List[int]
    connect_time: Optional[int] = None
    seed: Optional[int] = None

    @property
    def connected(self) -> bool:
        return self.connect_time is not None

    def __repr__(self):
        return (
            f"<GraphProcessRun(n={self.n}, steps={self.steps}, "
            f"connect_time={self.connect_time})>"
        )


@dataclass
class SampledGraph:
    """A simple graph on 0..n-1 stored as two parallel endpoint arrays (u < v)"""

    n: int
    u: np.ndarray
    v: np.ndarray
    p: Optional[float] = None

    @property
    def edge_count(self) -> int:
        return int(self.u.shape[0])

    def __repr__(self):
        return f"<SampledGraph(n={self.n}, edges={self.edge_count}, p={self.p})>"


@dataclass
class ExplorationState:
    """Explored / discovered / undiscovered split of the vertex set during a search"""

    explored: List[int] = field(default_factory=list)
    discovered: Dict[int, int] = field(default_factory=dict)
    undiscovered: Set[int] = field(default_factory=set)

    def __repr__(self):
        return (
            f"<ExplorationState(E={len(self.explored)}, "
            f"D={len(self.discovered)}, U={len(self.undiscovered)})>"
        )


@dataclass
class ExplorationResult:
    """
    Output of the re-seeded depth-first search

    `conclusion_times[j]` is the step at which the j-th component finished,
    `u_trajectory[i]` is |U_i|.
    """

    n: int
    p: float
    component_sizes: List[int]
    u_trajectory: List[int]
    conclusion_times: List[int]
    order: List[int]
    state: ExplorationState

    def __repr__(self):
        return (
            f"<ExplorationResult(n={self.n}, p={self.p}, "
            f"components={len(self.component_sizes)}, steps={len(self.u_trajectory) - 1})>"
        )
