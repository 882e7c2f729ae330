"""
Coalescent engine
Kingman, additive and multiplicative coalescents in three forms: uniform choice
(V1), driven by distinct edge weights (V2) and driven by edge rates (V3).
"""
import logging
import math
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from app.core.exceptions import (
    DuplicateWeightError,
    InvalidParameterError,
    ZeroRateError,
)
from app.models.forest import Forest, MergeRecord, RootedTree
from app.models.kernel import KernelKind
from app.models.trace import EmpiricalLogPartition, MergeTrace
from app.services import forest as forest_ops

logger = logging.getLogger(__name__)

ORIENTED = (KernelKind.KINGMAN, KernelKind.ADDITIVE)


class _UniformStream:
    """Buffered uniforms drawn from a numpy generator; index(k) is uniform on range(k)"""

    def __init__(self, rng: np.random.Generator, batch: int = 4096):
        self.rng = rng
        self.batch = batch
        self.buffer: List[float] = []
        self.pos = 0

    def uniform(self) -> float:
        if self.pos == len(self.buffer):
            self.buffer = self.rng.random(self.batch).tolist()
            self.pos = 0
        x = self.buffer[self.pos]
        self.pos += 1
        return x

    def index(self, k: int) -> int:
        return int(self.uniform() * k)


class _RootSet:
    """Current tree roots with O(1) uniform choice and removal"""

    def __init__(self, n: int):
        self.items = list(range(n))
        self.position = list(range(n))

    def __len__(self):
        return len(self.items)

    def remove(self, v: int) -> None:
        i = self.position[v]
        last = self.items[-1]
        self.items[i] = last
        self.position[last] = i
        self.items.pop()
        self.position[v] = -1

    def pick(self, stream: _UniformStream, exclude: Optional[int] = None) -> int:
        if exclude is None:
            return self.items[stream.index(len(self.items))]
        j = stream.index(len(self.items) - 1)
        if j >= self.position[exclude]:
            j += 1
        return self.items[j]


class _Fenwick:
    """Binary indexed tree over non-negative integer weights"""

    def __init__(self, weights: Sequence[int]):
        n = len(weights)
        tree = [0] * (n + 1)
        for i in range(1, n + 1):
            tree[i] += weights[i - 1]
            j = i + (i & -i)
            if j <= n:
                tree[j] += tree[i]
        self.n = n
        self.tree = tree
        self.total = sum(weights)
        self.top = 1 << (n.bit_length() - 1) if n else 0

    def add(self, i: int, delta: int) -> None:
        self.total += delta
        i += 1
        tree = self.tree
        while i <= self.n:
            tree[i] += delta
            i += i & -i

    def search(self, r: int) -> int:
        """Smallest 0-based index whose inclusive prefix sum exceeds r"""
        pos = 0
        bit = self.top
        tree = self.tree
        while bit:
            nxt = pos + bit
            if nxt <= self.n and tree[nxt] <= r:
                pos = nxt
                r -= tree[nxt]
            bit >>= 1
        return pos


class _CrossPairSampler:
    """
    Uniform pair of vertices in distinct components

    Rejection from all vertex pairs while at least half of them cross; after
    that, a component is drawn with weight |A|(n-|A|), a partner component with
    weight |B|, and one member of each uniformly.
    """

    def __init__(self, forest: Forest, stream: _UniformStream):
        self.forest = forest
        self.stream = stream
        self.two_stage = False

    def draw(self) -> Tuple[int, int]:
        forest = self.forest
        n = forest.n
        if not self.two_stage and 4 * forest_ops.mc_choice_count(forest) < n * (n - 1):
            self._switch()
        if not self.two_stage:
            stream = self.stream
            while True:
                u = stream.index(n)
                v = stream.index(n - 1)
                if v >= u:
                    v += 1
                if forest_ops.find(forest, u) != forest_ops.find(forest, v):
                    return u, v
        stream = self.stream
        a = self.by_pair.search(stream.index(self.by_pair.total))
        size_a = self.slot_size[a]
        self.by_size.add(a, -size_a)
        b = self.by_size.search(stream.index(n - size_a))
        self.by_size.add(a, size_a)
        members_a, members_b = self.members[a], self.members[b]
        self._pending = (a, b)
        return members_a[stream.index(len(members_a))], members_b[stream.index(len(members_b))]

    def merged(self) -> None:
        """Update the two-stage structures after the drawn pair was merged"""
        if not self.two_stage:
            return
        a, b = self._pending
        n = self.forest.n
        root = forest_ops.find(self.forest, self.members[a][0])
        keep, gone = (a, b) if self.slot_rep[a] == root else (b, a)
        s_keep, s_gone = self.slot_size[keep], self.slot_size[gone]
        s_new = s_keep + s_gone

        self.members[keep].extend(self.members[gone])
        self.members[gone] = []
        self.slot_rep[keep] = root
        self.slot_size[keep] = s_new
        self.slot_size[gone] = 0

        self.by_pair.add(keep, s_new * (n - s_new) - s_keep * (n - s_keep))
        self.by_pair.add(gone, -s_gone * (n - s_gone))
        self.by_size.add(keep, s_gone)
        self.by_size.add(gone, -s_gone)

    def _switch(self) -> None:
        forest = self.forest
        n = forest.n
        slot_of = {}
        members: List[List[int]] = []
        for v in range(n):
            r = forest_ops.find(forest, v)
            slot = slot_of.get(r)
            if slot is None:
                slot = slot_of[r] = len(members)
                members.append([])
            members[slot].append(v)
        self.members = members
        self.slot_rep = [0] * len(members)
        for r, slot in slot_of.items():
            self.slot_rep[slot] = r
        self.slot_size = [len(m) for m in members]
        self.by_pair = _Fenwick([s * (n - s) for s in self.slot_size])
        self.by_size = _Fenwick(self.slot_size)
        self.two_stage = True
        logger.debug(f"cross-pair sampler switched to two-stage with {len(members)} components")


def _check_n(n: int) -> None:
    if n < 1:
        raise InvalidParameterError(f"n must be at least 1, got {n}")


# ---------------------------------------------------------------------------
# Version 1: uniform choice
# ---------------------------------------------------------------------------

def run_uniform(kernel: KernelKind, n: int, rng: np.random.Generator) -> MergeTrace:
    """
    Run a coalescent to completion, each step uniform over the kernel's admissible set

    Admissible sets: Kingman, ordered pairs of distinct roots; additive, a vertex
    and the root of another tree; multiplicative, unordered cross-component pairs.

    Args:
        kernel: Which coalescent
        n: Number of vertices
        rng: Random stream

    Returns:
        MergeTrace with n - 1 records, `choices` set on each
    """
    _check_n(n)
    forest = forest_ops.new_forest(n)
    # refills sized to the run
    stream = _UniformStream(rng, batch=min(4096, 4 * n + 16))
    trace = MergeTrace(n=n, kernel=kernel, roots=[] if kernel in ORIENTED else None)

    if kernel is KernelKind.MULTIPLICATIVE:
        sampler = _CrossPairSampler(forest, stream)
        for _ in range(n - 1):
            choices = forest_ops.mc_choice_count(forest)
            u, v = sampler.draw()
            trace.records.append(forest_ops.merge(forest, u, v, choices=choices))
            sampler.merged()
        return trace

    roots = _RootSet(n)
    for _ in range(n - 1):
        r = len(roots)
        if kernel is KernelKind.KINGMAN:
            u = roots.pick(stream)
            v = roots.pick(stream, exclude=u)
            choices = r * (r - 1)
        else:
            u = stream.index(n)
            v = roots.pick(stream, exclude=forest_ops.tree_root_of(forest, u))
            choices = n * (r - 1)
        record = forest_ops.merge(forest, u, v, choices=choices)
        roots.remove(v)
        trace.records.append(record)
        trace.roots.append(forest_ops.tree_root_of(forest, u))
    return trace


# ---------------------------------------------------------------------------
# Versions 2 and 3: weight and rate driven
# ---------------------------------------------------------------------------

def _edge_arrays(kernel: KernelKind, n: int, values, label: str) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Flatten per-edge values into (tail, head, value) arrays

    Oriented kernels take an n x n array over ordered pairs (diagonal ignored).
    The multiplicative kernel takes a flat array of C(n, 2) values in pair-slot
    order or an n x n array whose upper triangle is used.
    """
    arr = np.asarray(values, dtype=float)
    if kernel in ORIENTED:
        if arr.shape != (n, n):
            raise InvalidParameterError(f"{label} for the {kernel.value} kernel must be an n x n array")
        tail, head = np.nonzero(~np.eye(n, dtype=bool))
        return tail, head, arr[tail, head]
    if arr.ndim == 2:
        if arr.shape != (n, n):
            raise InvalidParameterError(f"{label} matrix must be n x n")
        tail, head = np.triu_indices(n, k=1)
        return tail, head, arr[tail, head]
    if arr.shape != (forest_ops.pair_count(n),):
        raise InvalidParameterError(f"expected {forest_ops.pair_count(n)} {label}, got {arr.shape[0]}")
    tail, head = forest_ops.pairs_of(np.arange(arr.shape[0], dtype=np.int64))
    return tail, head, arr


def run_weight_driven(
    kernel: KernelKind,
    n: int,
    weights=None,
    rng: Optional[np.random.Generator] = None,
) -> MergeTrace:
    """
    Each step adds the smallest-weight admissible edge

    For the multiplicative kernel this is Kruskal's algorithm and the final tree
    is the minimum spanning tree. When `weights` is None they are drawn iid
    uniform from `rng`; otherwise the run is a deterministic function of them.

    Raises:
        DuplicateWeightError: two edges share a weight
    """
    _check_n(n)
    if weights is None:
        if rng is None:
            raise InvalidParameterError("either weights or rng must be given")
        weights = rng.random((n, n)) if kernel in ORIENTED else rng.random(forest_ops.pair_count(n))
    tail, head, w = _edge_arrays(kernel, n, weights, "weights")
    if np.unique(w).shape[0] != w.shape[0]:
        raise DuplicateWeightError("edge weights must be pairwise distinct")

    order = np.argsort(w, kind="stable")
    tail, head = tail[order].tolist(), head[order].tolist()

    forest = forest_ops.new_forest(n)
    is_root = [True] * n
    trace = MergeTrace(n=n, kernel=kernel, roots=[] if kernel in ORIENTED else None)
    # Admissibility never returns once lost, so one pass over the sorted edges suffices.
    for k, l in zip(tail, head):
        if forest.component_count == 1:
            break
        if kernel is KernelKind.MULTIPLICATIVE:
            if forest_ops.same_component(forest, k, l):
                continue
        elif kernel is KernelKind.KINGMAN:
            if not (is_root[k] and is_root[l]):
                continue
        else:
            if not is_root[l] or forest_ops.same_component(forest, k, l):
                continue
        trace.records.append(forest_ops.merge(forest, k, l))
        if kernel in ORIENTED:
            is_root[l] = False
            trace.roots.append(forest_ops.tree_root_of(forest, k))
    return trace


def run_rate_driven(kernel: KernelKind, n: int, rates, rng: np.random.Generator) -> MergeTrace:
    """
    Each step picks an admissible edge with probability proportional to its rate

    Raises:
        ZeroRateError: the admissible edges all have rate zero at some step
    """
    _check_n(n)
    tail, head, x = _edge_arrays(kernel, n, rates, "rates")
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise InvalidParameterError("rates must be finite and non-negative")

    forest = forest_ops.new_forest(n)
    is_root = np.ones(n, dtype=bool)
    trace = MergeTrace(n=n, kernel=kernel, roots=[] if kernel in ORIENTED else None)
    for step in range(1, n):
        component = np.fromiter((forest_ops.find(forest, v) for v in range(n)), dtype=np.int64, count=n)
        admissible = component[tail] != component[head]
        if kernel is KernelKind.KINGMAN:
            admissible &= is_root[tail] & is_root[head]
        elif kernel is KernelKind.ADDITIVE:
            admissible &= is_root[head]
        idx = np.flatnonzero(admissible)
        cumulative = np.cumsum(x[idx])
        total = float(cumulative[-1]) if cumulative.shape[0] else 0.0
        if total <= 0.0:
            raise ZeroRateError(f"all admissible edges have rate zero at step {step}")
        chosen = idx[min(int(np.searchsorted(cumulative, rng.random() * total, side="right")), idx.shape[0] - 1)]
        k, l = int(tail[chosen]), int(head[chosen])
        trace.records.append(forest_ops.merge(forest, k, l, choices=int(idx.shape[0])))
        if kernel in ORIENTED:
            is_root[l] = False
            trace.roots.append(forest_ops.tree_root_of(forest, k))
    return trace


# ---------------------------------------------------------------------------
# Trace analysis
# ---------------------------------------------------------------------------

def empirical_log_partition(trace: MergeTrace, k: int) -> EmpiricalLogPartition:
    """
    log of prod_{i<k} (n^2 - S_i) and of the same product divided by 2^(k-1)

    Raises:
        InvalidParameterError: non-multiplicative trace, k out of range, or too few records
    """
    n = trace.n
    if trace.kernel is not KernelKind.MULTIPLICATIVE:
        raise InvalidParameterError("the empirical partition function is defined for the multiplicative coalescent only")
    if not 1 <= k <= n:
        raise InvalidParameterError(f"k must lie in [1, n={n}], got {k}")
    if len(trace.records) < k - 1:
        raise InvalidParameterError(f"trace has {len(trace.records)} records, need {k - 1}")
    nn = n * n
    log_z_arrow = 0.0
    for record in trace.records[: k - 1]:
        log_z_arrow += math.log(nn - record.pre_sum_sq)
    return EmpiricalLogPartition(
        n=n,
        k=k,
        log_z_arrow=log_z_arrow,
        log_z=log_z_arrow - (k - 1) * math.log(2),
    )


def exact_empirical_partition(trace: MergeTrace, k: int) -> Fraction:
    """Big-integer prod_{i<k} (n^2 - S_i) / 2^(k-1), for cross-checking the log form"""
    n = trace.n
    if n > 64:
        raise InvalidParameterError("exact accumulation is offered for n <= 64")
    empirical_log_partition(trace, k)
    product = 1
    for record in trace.records[: k - 1]:
        product *= n * n - record.pre_sum_sq
    return Fraction(product, 2 ** (k - 1))


def additive_empirical_constant_check(trace: MergeTrace, k: Optional[int] = None) -> bool:
    """
    Whether the product of per-step admissible counts equals n^(k-1) (n-1)_(k-1)

    Counts come from the records when the run stored them, otherwise from a
    replay of the trace.
    """
    if trace.kernel is not KernelKind.ADDITIVE:
        raise InvalidParameterError("the constant check applies to additive traces")
    n = trace.n
    k = n if k is None else k
    if not 1 <= k <= n or len(trace.records) < k - 1:
        raise InvalidParameterError(f"k={k} is out of range for this trace")

    forest = forest_ops.new_forest(n)
    product = 1
    for record in trace.records[: k - 1]:
        choices = record.choices or n * (forest.component_count - 1)
        product *= choices
        forest_ops.merge(forest, record.u, record.v)
    return product == n ** (k - 1) * math.perm(n - 1, k - 1)


def final_tree(trace: MergeTrace) -> RootedTree:
    """
    Final tree of a complete trace

    Oriented kernels keep their own root; the multiplicative tree is rooted at vertex 1.
    """
    edges = [(r.u, r.v) for r in trace.records]
    if len(edges) != trace.n - 1:
        raise InvalidParameterError("trace is not complete")
    if trace.kernel in ORIENTED:
        return forest_ops.oriented_tree(trace.n, edges, trace.final_root)
    return forest_ops.tree_from_edges(trace.n, edges, 0)


def decreasing_labelling_of(trace: MergeTrace) -> List[int]:
    """
    Addition label of the edge above each vertex in the final oriented tree

    labels[v] is the step that attached v to its parent, 0 for the root.
    """
    if trace.kernel not in ORIENTED:
        raise InvalidParameterError("edge labels above vertices need an oriented kernel")
    labels = [0] * trace.n
    for record in trace.records:
        labels[record.v] = record.step
    return labels


def chain_shapes(trace: MergeTrace) -> List[Tuple[int, ...]]:
    """Descending block sizes of every partition along the chain, singletons first"""
    sizes = [1] * trace.n
    shapes = [tuple(sizes)]
    for record in trace.records:
        sizes.remove(record.size_a)
        sizes.remove(record.size_b)
        sizes.append(record.size_a + record.size_b)
        sizes.sort(reverse=True)
        shapes.append(tuple(sizes))
    return shapes


def sum_sq_trajectory(trace: MergeTrace) -> List[int]:
    """S_1, ..., S_n along a complete chain"""
    values = [r.pre_sum_sq for r in trace.records]
    values.append(trace.n * trace.n)
    return values
