"""
Exports
Plain-text forests and CSV tables for traces, trajectories and experiment results.
"""
import logging
from typing import Optional, Sequence, Tuple

import pandas as pd

from app.models.forest import Forest, RootedTree
from app.models.trace import MergeTrace
from app.schemas.experiment import ExperimentResult, OutputFormat

logger = logging.getLogger(__name__)


def forest_text(n: int, edges: Sequence[Tuple[int, int]], root: Optional[int] = None) -> str:
    """
    Header "n=<n> root=<r|none>" then one "u v label" line per edge, 1-based,
    labels numbering the edges in the order given
    """
    header = f"n={n} root={'none' if root is None else root + 1}"
    lines = [header] + [f"{u + 1} {v + 1} {label}" for label, (u, v) in enumerate(edges, start=1)]
    return "\n".join(lines) + "\n"


def export_forest_text(forest: Forest) -> str:
    root = None
    if forest.component_count == 1:
        root = forest.tree_root[next(v for v in range(forest.n) if forest.parent[v] == v)]
    return forest_text(forest.n, forest.edges, root)


def export_tree_text(tree: RootedTree) -> str:
    edges = [(p, v) for v, p in enumerate(tree.parent) if p is not None]
    return forest_text(tree.n, edges, tree.root)


def export_trace_text(trace: MergeTrace) -> str:
    root = trace.final_root if len(trace.records) == trace.n - 1 else None
    return forest_text(trace.n, [(r.u, r.v) for r in trace.records], root)


def trace_frame(trace: MergeTrace) -> pd.DataFrame:
    """Columns step, u, v (1-based), size_a, size_b, pre_sum_sq"""
    return pd.DataFrame(
        [
            {
                "step": r.step,
                "u": r.u + 1,
                "v": r.v + 1,
                "size_a": r.size_a,
                "size_b": r.size_b,
                "pre_sum_sq": r.pre_sum_sq,
            }
            for r in trace.records
        ],
        columns=["step", "u", "v", "size_a", "size_b", "pre_sum_sq"],
    )


def export_trace_csv(trace: MergeTrace) -> str:
    return trace_frame(trace).to_csv(index=False)


def result_frame(result: ExperimentResult) -> pd.DataFrame:
    """Row table when the result has one, otherwise a single row of scalar estimates"""
    if result.table:
        return pd.DataFrame(result.table)
    row = {k: v for k, v in result.estimates.items() if not isinstance(v, (dict, list))}
    row.update({"reps": result.reps, "seed": result.seed, "generator_id": result.generator_id})
    return pd.DataFrame([row])


def render(result: ExperimentResult, fmt: OutputFormat) -> str:
    if fmt is OutputFormat.CSV:
        return result_frame(result).to_csv(index=False)
    return result.model_dump_json(indent=2) + "\n"


def write(text: str, output: Optional[str]) -> None:
    if output is None:
        print(text, end="")
        return
    with open(output, "w", encoding="utf-8") as handle:
        handle.write(text)
    logger.info(f"wrote {len(text)} characters to {output}")
