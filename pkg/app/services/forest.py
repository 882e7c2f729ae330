"""
Forest core
Union-find over labeled vertices with exact susceptibility tracking,
and the rooted-tree utilities (heights, root distances) built on top of it.
"""
import logging
from collections import deque
from fractions import Fraction
from math import isqrt
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.config import settings
from app.core.exceptions import InvalidParameterError, SameComponentMergeError
from app.models.forest import Forest, MergeRecord, RootedTree

logger = logging.getLogger(__name__)


def new_forest(n: int) -> Forest:
    """
    Forest of n singleton components

    Args:
        n: Number of vertices, at least 1

    Returns:
        Forest: vertices 0..n-1, sum_sq = n, no edges
    """
    if n < 1:
        raise InvalidParameterError(f"a forest needs at least one vertex, got n={n}")
    return Forest(
        n=n,
        parent=list(range(n)),
        size=[1] * n,
        tree_root=list(range(n)),
        sum_sq=n,
        edges=[],
        component_count=n,
    )


def find(forest: Forest, v: int) -> int:
    """Representative of v's component, compressing the path behind it"""
    parent = forest.parent
    root = v
    while parent[root] != root:
        root = parent[root]
    while parent[v] != root:
        parent[v], v = root, parent[v]
    return root


def same_component(forest: Forest, u: int, v: int) -> bool:
    return find(forest, u) == find(forest, v)


def merge(forest: Forest, u: int, v: int, choices: int = 0) -> MergeRecord:
    """
    Join the components of u and v with the edge (u, v)

    The merged tree keeps the root of u's tree. Union is by size; sum_sq grows
    by exactly 2ab.

    Args:
        forest: Forest to mutate
        u: Endpoint whose tree root survives
        v: Other endpoint
        choices: Admissible-choice count to store on the record

    Returns:
        MergeRecord: pre-merge sizes and sum_sq

    Raises:
        SameComponentMergeError: u and v already share a component
    """
    ru = find(forest, u)
    rv = find(forest, v)
    if ru == rv:
        raise SameComponentMergeError(
            f"vertices {u + 1} and {v + 1} are already in one component"
        )

    size = forest.size
    a, b = size[ru], size[rv]
    pre_sum_sq = forest.sum_sq
    kept_root = forest.tree_root[ru]

    big, small = (ru, rv) if a >= b else (rv, ru)
    forest.parent[small] = big
    size[big] = a + b
    forest.tree_root[big] = kept_root

    forest.sum_sq = pre_sum_sq + 2 * a * b
    forest.edges.append((u, v))
    forest.component_count -= 1

    if settings.DEBUG_CHECKS:
        check_invariants(forest)

    return MergeRecord(
        step=len(forest.edges),
        u=u,
        v=v,
        size_a=a,
        size_b=b,
        pre_sum_sq=pre_sum_sq,
        choices=choices,
    )


def component_sizes(forest: Forest) -> List[int]:
    """Sizes of all components, one entry per representative (vertex order)"""
    return [forest.size[v] for v in range(forest.n) if forest.parent[v] == v]


def tree_root_of(forest: Forest, v: int) -> int:
    """Root of the oriented tree containing v"""
    return forest.tree_root[find(forest, v)]


def check_invariants(forest: Forest) -> None:
    """Recompute the bookkeeping from scratch; raises AssertionError on drift"""
    sizes = component_sizes(forest)
    assert sum(sizes) == forest.n, "component sizes do not sum to n"
    assert sum(s * s for s in sizes) == forest.sum_sq, "tracked sum_sq drifted"
    assert forest.component_count == forest.n - len(forest.edges), "component count drifted"
    assert len(sizes) == forest.component_count, "representative count drifted"


def susceptibility(forest: Forest) -> Fraction:
    """chi = sum_sq / n, exact"""
    return Fraction(forest.sum_sq, forest.n)


def susceptibility_float(forest: Forest) -> float:
    return forest.sum_sq / forest.n


def mc_choice_count(forest: Forest) -> int:
    """Number of unordered vertex pairs lying in distinct components"""
    return (forest.n * forest.n - forest.sum_sq) // 2


# ---------------------------------------------------------------------------
# Edge slots of K_n
# ---------------------------------------------------------------------------

def pair_count(n: int) -> int:
    return n * (n - 1) // 2


def pair_index(u: int, v: int) -> int:
    """Slot of the unordered pair {u, v}; slots are ordered (0,1), (0,2), (1,2), (0,3), ..."""
    if u > v:
        u, v = v, u
    return v * (v - 1) // 2 + u


def pair_of(k: int) -> Tuple[int, int]:
    """Inverse of pair_index"""
    v = (1 + isqrt(1 + 8 * k)) // 2
    return k - v * (v - 1) // 2, v


def pairs_of(slots: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized pair_of for an int64 array of slots"""
    k = np.asarray(slots, dtype=np.int64)
    v = ((1 + np.sqrt(1 + 8 * k.astype(np.float64))) // 2).astype(np.int64)
    # float sqrt can be off by one either way for large slots
    v = np.where(v * (v - 1) // 2 > k, v - 1, v)
    v = np.where((v + 1) * v // 2 <= k, v + 1, v)
    return k - v * (v - 1) // 2, v


# ---------------------------------------------------------------------------
# Component size ledger
# ---------------------------------------------------------------------------

class SizeLedger:
    """
    Histogram of component sizes with the two largest sizes kept current

    `second` is the size of the second largest component (equal to `largest`
    when two components tie), 0 when only one component exists.
    """

    def __init__(self, n: int):
        self.count = [0] * (n + 1)
        self.count[1] = n
        self.components = n
        self.largest = 1
        self.second = 1 if n > 1 else 0

    def join(self, a: int, b: int) -> None:
        count = self.count
        count[a] -= 1
        count[b] -= 1
        joined = a + b
        count[joined] += 1
        self.components -= 1

        old_largest, old_second = self.largest, self.second
        if joined > old_largest:
            self.largest = joined
        largest = self.largest

        if self.components == 1:
            self.second = 0
            return
        if count[largest] >= 2:
            self.second = largest
            return

        # Every non-top size is bounded by one of these.
        start = old_second
        if old_largest < largest:
            start = max(start, old_largest)
        if joined < largest:
            start = max(start, joined)
        s = start
        while s > 0 and count[s] == 0:
            s -= 1
        self.second = s


# ---------------------------------------------------------------------------
# Rooted trees
# ---------------------------------------------------------------------------

def oriented_tree(n: int, edges: Sequence[Tuple[int, int]], root: int) -> RootedTree:
    """
    Rooted tree from parent-to-child edges (u, v): parent[v] = u

    Raises:
        InvalidParameterError: a vertex receives two parents, or the root has one
    """
    parent: List[Optional[int]] = [None] * n
    for u, v in edges:
        if parent[v] is not None or v == root:
            raise InvalidParameterError(f"vertex {v + 1} cannot take parent {u + 1}")
        parent[v] = u
    if sum(1 for p in parent if p is None) != 1:
        raise InvalidParameterError("edges do not form a single rooted tree")
    return RootedTree(n=n, parent=parent, root=root)


def tree_from_edges(n: int, edges: Sequence[Tuple[int, int]], root: int) -> RootedTree:
    """
    Root an undirected spanning tree at `root` by breadth-first search

    Raises:
        InvalidParameterError: edges do not span a tree on n vertices
    """
    if len(edges) != n - 1:
        raise InvalidParameterError(f"a spanning tree on {n} vertices has {n - 1} edges, got {len(edges)}")
    adjacency: List[List[int]] = [[] for _ in range(n)]
    for u, v in edges:
        adjacency[u].append(v)
        adjacency[v].append(u)

    parent: List[Optional[int]] = [None] * n
    seen = [False] * n
    seen[root] = True
    queue = deque([root])
    reached = 1
    while queue:
        x = queue.popleft()
        for y in adjacency[x]:
            if not seen[y]:
                seen[y] = True
                parent[y] = x
                reached += 1
                queue.append(y)
    if reached != n:
        raise InvalidParameterError("edges do not connect all vertices")
    return RootedTree(n=n, parent=parent, root=root)


def children_lists(tree: RootedTree) -> List[List[int]]:
    children: List[List[int]] = [[] for _ in range(tree.n)]
    for v, p in enumerate(tree.parent):
        if p is not None:
            children[p].append(v)
    return children


def root_distances(tree: RootedTree) -> List[int]:
    """Number of edges from the root to each vertex"""
    children = children_lists(tree)
    depth = [0] * tree.n
    queue = deque([tree.root])
    while queue:
        x = queue.popleft()
        for y in children[x]:
            depth[y] = depth[x] + 1
            queue.append(y)
    return depth


def height(tree: RootedTree) -> int:
    return max(root_distances(tree))


def subtree_sizes(tree: RootedTree) -> List[int]:
    """|T_v| for every vertex v"""
    children = children_lists(tree)
    order = []
    queue = deque([tree.root])
    while queue:
        x = queue.popleft()
        order.append(x)
        queue.extend(children[x])
    sizes = [1] * tree.n
    for x in reversed(order):
        p = tree.parent[x]
        if p is not None:
            sizes[p] += sizes[x]
    return sizes
