from app.models.kernel import KernelKind
from app.models.forest import Forest, RootedTree, MergeRecord
from app.models.trace import MergeTrace, EmpiricalLogPartition
from app.models.graph import GraphProcessRun, SampledGraph, ExplorationState, ExplorationResult
from app.models.mst import WeightedRun
from app.models.oracle import ChainWeightState

__all__ = [
    "KernelKind",
    "Forest",
    "RootedTree",
    "MergeRecord",
    "MergeTrace",
    "EmpiricalLogPartition",
    "GraphProcessRun",
    "SampledGraph",
    "ExplorationState",
    "ExplorationResult",
    "WeightedRun",
    "ChainWeightState",
]
