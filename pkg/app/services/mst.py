"""
Minimum spanning trees
Kruskal's algorithm on K_n with random or supplied weights, the realization
form of the MST weight identity, and height and distance statistics of the
final coalescent trees.
"""
import logging
import math
from fractions import Fraction
from typing import Dict, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from app.core.config import settings
from app.core.exceptions import (
    DuplicateWeightError,
    InvalidParameterError,
    TruncatedRunError,
    UnsupportedSizeError,
)
from app.models.kernel import KernelKind
from app.models.mst import Weight, WeightedRun
from app.services import coalescent
from app.services import forest as forest_ops
from app.services.er_process import EdgePermutation
from app.services.exact_oracle import exact_oracle
from app.services.replicates import map_replicates, summarize

logger = logging.getLogger(__name__)

UNIFORM = "uniform01"
EXPONENTIAL = "exponential1"
SUPPLIED = "supplied"
DISTRIBUTIONS = (UNIFORM, EXPONENTIAL)

WeightSource = Union[str, Sequence[Weight], Mapping[Tuple[int, int], Weight]]


class _SortedWeights:
    """
    Increasing order statistics of N iid uniform or rate-1 exponential variables

    The k-th exponential order statistic is sum_{j<=k} E_j / (N - j + 1); the
    uniform one is 1 - exp of minus that.
    """

    def __init__(self, total: int, distribution: str, rng: np.random.Generator):
        self.total = total
        self.distribution = distribution
        self.rng = rng
        self.position = 0
        self.level = 0.0

    def take(self, count: int) -> np.ndarray:
        count = min(count, self.total - self.position)
        remaining = self.total - self.position - np.arange(count, dtype=np.float64)
        levels = self.level + np.cumsum(self.rng.standard_exponential(count) / remaining)
        self.position += count
        if count:
            self.level = float(levels[-1])
        if self.distribution == EXPONENTIAL:
            return levels
        return -np.expm1(-levels)


def _supplied_order(n: int, weights: WeightSource) -> Tuple[List[Tuple[int, int]], List[Weight]]:
    total = forest_ops.pair_count(n)
    if isinstance(weights, Mapping):
        items = []
        for (u, v), w in weights.items():
            if u == v or not (0 <= u < n and 0 <= v < n):
                raise InvalidParameterError(f"({u}, {v}) is not an edge of K_{n}")
            items.append(((min(u, v), max(u, v)), w))
        if len({pair for pair, _ in items}) != total:
            raise InvalidParameterError(f"weights must cover all {total} edges exactly once")
    else:
        if len(weights) != total:
            raise InvalidParameterError(f"expected {total} weights, got {len(weights)}")
        items = [(forest_ops.pair_of(k), w) for k, w in enumerate(weights)]
    if len({w for _, w in items}) != total:
        raise DuplicateWeightError("edge weights must be pairwise distinct")
    items.sort(key=lambda item: item[1])
    return [pair for pair, _ in items], [w for _, w in items]


def kruskal(
    n: int,
    distribution: WeightSource = UNIFORM,
    rng: Optional[np.random.Generator] = None,
    direct_sort: bool = False,
    seed: Optional[int] = None,
) -> WeightedRun:
    """
    Minimum spanning tree of K_n by an increasing-weight scan with union-find

    Random weights are generated already sorted: the rank order is a uniform
    edge permutation and the values are order statistics, so only the examined
    prefix is ever drawn. `direct_sort` instead draws every weight and sorts.

    Args:
        n: Number of vertices, at least 2
        distribution: "uniform01", "exponential1", a list of C(n, 2) weights in
            pair-slot order, or a mapping from 0-based pairs to weights
        rng: Random stream, required for random weights
        direct_sort: Sort all weights explicitly
        seed: Master seed, stored on the run

    Returns:
        WeightedRun: examined prefix, acceptance flags and the tree

    Raises:
        DuplicateWeightError: supplied weights repeat
    """
    if n < 2:
        raise InvalidParameterError(f"kruskal needs n >= 2, got {n}")
    total = forest_ops.pair_count(n)

    if isinstance(distribution, str):
        if distribution not in DISTRIBUTIONS:
            raise InvalidParameterError(f"unknown weight distribution {distribution!r}")
        if rng is None:
            raise InvalidParameterError("random weights need an rng")
        label = distribution
        if direct_sort:
            if total > settings.MATERIALIZE_MAX_PAIRS:
                raise UnsupportedSizeError(f"direct sort is limited to {settings.MATERIALIZE_MAX_PAIRS} pairs")
            values = rng.random(total) if distribution == UNIFORM else rng.standard_exponential(total)
            order = np.argsort(values, kind="stable")
            u, v = forest_ops.pairs_of(order)
            stream = iter(zip(zip(u.tolist(), v.tolist()), values[order].tolist()))
        else:
            stream = _presorted_stream(n, total, distribution, rng)
    else:
        label = SUPPLIED
        pairs, values = _supplied_order(n, distribution)
        stream = iter(zip(pairs, values))

    forest = forest_ops.new_forest(n)
    run = WeightedRun(n=n, distribution=label, seed=seed)
    total_weight: Weight = 0
    for (u, v), w in stream:
        run.edges.append((u, v))
        run.weights.append(w)
        if forest_ops.same_component(forest, u, v):
            run.accepted.append(False)
            continue
        forest_ops.merge(forest, u, v)
        run.accepted.append(True)
        run.mst_edges.append((u, v, w))
        total_weight += w
        if forest.component_count == 1:
            break
    run.total_weight = total_weight
    logger.debug(f"kruskal n={n}: examined {len(run.edges)} edges, w(T)={float(total_weight):.6f}")
    return run


def _presorted_stream(n: int, total: int, distribution: str, rng: np.random.Generator):
    permutation = EdgePermutation(n, rng)
    values = _SortedWeights(total, distribution, rng)
    batch = max(64, 4 * n)
    while permutation.position < total:
        u, v = forest_ops.pairs_of(permutation.take(batch))
        w = values.take(u.shape[0])
        yield from zip(zip(u.tolist(), v.tolist()), w.tolist())
        batch *= 2


def weight_identity_check(run: WeightedRun) -> bool:
    """
    w(T) equals the sum of X_{m+1} over the steps at which chi increases

    The replay recomputes the joining predicate from scratch with its own
    union-find and adds the same values in the same order.
    """
    forest = forest_ops.new_forest(run.n)
    replayed: Weight = 0
    for (u, v), w, accepted in zip(run.edges, run.weights, run.accepted):
        before = forest.sum_sq
        if not forest_ops.same_component(forest, u, v):
            forest_ops.merge(forest, u, v)
        increased = forest.sum_sq > before
        if increased != accepted:
            return False
        if increased:
            replayed += w
    return replayed == run.total_weight and forest.component_count == 1


def tree_weight(edges: Sequence[Tuple[int, int]], weights: Mapping[Tuple[int, int], Weight]) -> Weight:
    return sum(weights[(min(u, v), max(u, v))] for u, v in edges)


def brute_force_mst_weight(n: int, weights: Mapping[Tuple[int, int], Weight]) -> Weight:
    """Smallest total weight over all n^{n-2} spanning trees"""
    if n > 7:
        raise UnsupportedSizeError(f"spanning tree enumeration is limited to n <= 7, got {n}")
    return min(tree_weight(edges, weights) for edges in exact_oracle.enumerate_labeled_trees(n))


def light_tree_components(
    run: WeightedRun,
    threshold: Optional[float] = None,
) -> List[Tuple[List[int], List[Tuple[int, int]]]]:
    """
    Components of the graph of edges with weight <= threshold that are trees

    Each is returned as (sorted vertices, edges). The threshold defaults to 1/n.

    Raises:
        TruncatedRunError: the scan stopped below the threshold
    """
    n = run.n
    threshold = 1.0 / n if threshold is None else threshold
    light = [(e, w) for e, w in zip(run.edges, run.weights) if w <= threshold]
    if len(light) == len(run.edges) and len(run.edges) < forest_ops.pair_count(n):
        raise TruncatedRunError(f"the scan ended at weight {float(run.weights[-1]):.6g}, below {threshold}")

    forest = forest_ops.new_forest(n)
    for (u, v), _ in light:
        if not forest_ops.same_component(forest, u, v):
            forest_ops.merge(forest, u, v)
    members: Dict[int, List[int]] = {}
    for v in range(n):
        members.setdefault(forest_ops.find(forest, v), []).append(v)
    edges_of: Dict[int, List[Tuple[int, int]]] = {}
    for (u, v), _ in light:
        edges_of.setdefault(forest_ops.find(forest, u), []).append((u, v))

    components = []
    for rep, vertices in sorted(members.items(), key=lambda item: item[1][0]):
        edges = edges_of.get(rep, [])
        if len(edges) == len(vertices) - 1:
            components.append((vertices, edges))
    return components


def _mst_weight(rng: np.random.Generator, n: int) -> Tuple[float, bool]:
    run = kruskal(n, UNIFORM, rng)
    return float(run.total_weight), weight_identity_check(run)


def frieze_estimate(n: int, reps: int, seed: int, workers: Optional[int] = None) -> dict:
    """
    Mean and standard error of w(T) over `reps` uniform-weight replicates, and
    whether the weight identity held on every one
    """
    outcomes = map_replicates(_mst_weight, seed, reps, args=(n,), workers=workers)
    summary = summarize([w for w, _ in outcomes])
    summary["identity_holds"] = all(ok for _, ok in outcomes)
    logger.info(f"mst weight at n={n}: {summary['mean']:.6f} +/- {summary['stderr']:.6f}")
    return summary


# ---------------------------------------------------------------------------
# Distances and heights
# ---------------------------------------------------------------------------

def mst_two_point(n: int, rng: np.random.Generator) -> int:
    """Distance D_n from vertex n to vertex 1 in the uniform-weight MST"""
    run = kruskal(n, UNIFORM, rng)
    tree = forest_ops.tree_from_edges(n, [(u, v) for u, v, _ in run.mst_edges], 0)
    return forest_ops.root_distances(tree)[n - 1]


def tree_height_by_kernel(kernel: KernelKind, n: int, rng: np.random.Generator) -> int:
    """Height of the final tree of a uniform run; the multiplicative tree is rooted at vertex 1"""
    if n < 1:
        raise InvalidParameterError(f"n must be at least 1, got {n}")
    return forest_ops.height(coalescent.final_tree(coalescent.run_uniform(kernel, n, rng)))


def depth_of_vertex(kernel: KernelKind, n: int, rng: np.random.Generator, vertex: int = 1) -> int:
    """Distance from the root to `vertex` (1-based) in the final tree of a uniform run"""
    if not 1 <= vertex <= n:
        raise InvalidParameterError(f"vertex must lie in [1, {n}], got {vertex}")
    tree = coalescent.final_tree(coalescent.run_uniform(kernel, n, rng))
    return forest_ops.root_distances(tree)[vertex - 1]


def additive_depth_pmf(n: int, exact: bool = False) -> List[Union[float, Fraction]]:
    """pmf[k - 1] = P(D_1 = k - 1) = (k/n) prod_{i<k} (1 - i/n), k = 1..n"""
    if n < 1:
        raise InvalidParameterError(f"n must be at least 1, got {n}")
    one = Fraction(1) if exact else 1.0
    survive = one
    pmf = []
    for k in range(1, n + 1):
        pmf.append(survive * k / n)
        survive = survive * (n - k) / n
    return pmf


def _height_and_depth(rng: np.random.Generator, kernel: KernelKind, n: int) -> Tuple[int, int]:
    tree = coalescent.final_tree(coalescent.run_uniform(kernel, n, rng))
    depths = forest_ops.root_distances(tree)
    return max(depths), depths[0]


def height_profile(
    kernel: KernelKind,
    n: int,
    reps: int,
    seed: int,
    workers: Optional[int] = None,
) -> dict:
    """Mean and median height and depth of vertex 1, with reference scales"""
    pairs = map_replicates(_height_and_depth, seed, reps, args=(kernel, n), workers=workers)
    heights = np.array([h for h, _ in pairs], dtype=float)
    depths = np.array([d for _, d in pairs], dtype=float)
    return {
        "kernel": kernel.value,
        "n": n,
        "reps": reps,
        "mean_height": float(heights.mean()),
        "median_height": float(np.median(heights)),
        "mean_depth_1": float(depths.mean()),
        "median_depth_1": float(np.median(depths)),
        "log_n": math.log(n) if n > 1 else 0.0,
        "sqrt_n": math.sqrt(n),
        "n_pow_eighth": n ** 0.125,
        "fraction_above_n_pow_eighth": float(np.mean(heights > n ** 0.125)),
    }
