"""
Erdos-Renyi process
The graph process over a random permutation of the edges of K_n, the coupling
that reads the multiplicative coalescent off it, G(n, p) sampling and the
re-seeded depth-first exploration.
"""
import heapq
import logging
import math
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy import sparse, stats
from scipy.sparse import csgraph

from app.core.config import settings
from app.core.exceptions import InvalidParameterError, TruncatedRunError
from app.models.graph import ExplorationResult, ExplorationState, GraphProcessRun, SampledGraph
from app.models.kernel import KernelKind
from app.models.trace import MergeTrace
from app.services import forest as forest_ops
from app.services import numerics
from app.services.replicates import map_replicates

logger = logging.getLogger(__name__)

_LAZY_BATCH = 4096


def _check_p(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise InvalidParameterError(f"p must lie in [0, 1], got {p}")


# ---------------------------------------------------------------------------
# Edge permutation
# ---------------------------------------------------------------------------

class EdgePermutation:
    """
    Uniformly random order of the C(n, 2) edge slots of K_n

    Small slot spaces are permuted up front; larger ones are shuffled lazily
    (Fisher-Yates with a dictionary of displaced slots), so only the prefix
    actually consumed costs memory.
    """

    def __init__(self, n: int, rng: np.random.Generator):
        self.total = forest_ops.pair_count(n)
        self.rng = rng
        self.position = 0
        self.materialized = self.total <= settings.MATERIALIZE_MAX_PAIRS
        if self.materialized:
            self._order = rng.permutation(self.total)
        else:
            self._displaced: Dict[int, int] = {}

    def take(self, count: int) -> np.ndarray:
        """Next `count` slots of the permutation"""
        count = min(count, self.total - self.position)
        start = self.position
        self.position += count
        if self.materialized:
            return self._order[start:start + count]

        targets = self.rng.integers(np.arange(start, start + count), self.total)
        displaced = self._displaced
        out = np.empty(count, dtype=np.int64)
        for offset, j in enumerate(targets.tolist()):
            i = start + offset
            out[offset] = displaced.get(j, j)
            displaced[j] = displaced.pop(i, i)
        return out

    def pairs(self, batch: int = _LAZY_BATCH) -> Iterable[Tuple[int, int]]:
        while self.position < self.total:
            u, v = forest_ops.pairs_of(self.take(batch))
            yield from zip(u.tolist(), v.tolist())


# ---------------------------------------------------------------------------
# Graph process and coupling
# ---------------------------------------------------------------------------

def run_graph_process(
    n: int,
    m_max: Optional[int] = None,
    rng: Optional[np.random.Generator] = None,
    stop_when_connected: bool = False,
    seed: Optional[int] = None,
    edges: Optional[Sequence[Tuple[int, int]]] = None,
) -> GraphProcessRun:
    """
    Add the edges of K_n one at a time in random order and stream statistics

    Edges that close a cycle change nothing but the edge count.

    Args:
        n: Number of vertices
        m_max: Edges to add, C(n, 2) by default
        rng: Source of the edge permutation
        stop_when_connected: End the run at the connection time
        seed: Master seed, stored on the run for provenance
        edges: Explicit edge order (0-based pairs) replacing the random permutation

    Returns:
        GraphProcessRun
    """
    if n < 1:
        raise InvalidParameterError(f"n must be at least 1, got {n}")
    total = forest_ops.pair_count(n)
    m_max = total if m_max is None else m_max
    if not 0 <= m_max <= total:
        raise InvalidParameterError(f"m_max must lie in [0, {total}], got {m_max}")

    if edges is not None:
        if len(edges) < m_max:
            raise InvalidParameterError(f"{len(edges)} edges given, need {m_max}")
        source: Iterable[Tuple[int, int]] = iter(edges)
    else:
        if rng is None:
            raise InvalidParameterError("either rng or an explicit edge order is required")
        source = EdgePermutation(n, rng).pairs(batch=min(_LAZY_BATCH, max(m_max, 1)))

    forest = forest_ops.new_forest(n)
    ledger = forest_ops.SizeLedger(n)
    edge_u = np.empty(m_max, dtype=np.int64)
    edge_v = np.empty(m_max, dtype=np.int64)
    joined = np.zeros(m_max, dtype=bool)
    chi_num = np.empty(m_max + 1, dtype=np.int64)
    tau = np.empty(m_max + 1, dtype=np.int64)
    largest = np.empty(m_max + 1, dtype=np.int64)
    second = np.empty(m_max + 1, dtype=np.int64)
    chi_num[0], tau[0], largest[0], second[0] = n, 0, ledger.largest, ledger.second

    coupling_times = [0]
    connect_time = 0 if n == 1 else None
    steps = 0
    for m, (u, v) in enumerate(source, start=1):
        if m > m_max or (stop_when_connected and connect_time is not None):
            break
        edge_u[m - 1], edge_v[m - 1] = u, v
        if not forest_ops.same_component(forest, u, v):
            record = forest_ops.merge(forest, u, v)
            ledger.join(record.size_a, record.size_b)
            joined[m - 1] = True
            coupling_times.append(m)
            if forest.component_count == 1:
                connect_time = m
        chi_num[m] = forest.sum_sq
        tau[m] = len(coupling_times) - 1
        largest[m], second[m] = ledger.largest, ledger.second
        steps = m

    logger.debug(f"graph process n={n}: {steps} edges, connect_time={connect_time}")
    return GraphProcessRun(
        n=n,
        steps=steps,
        edge_u=edge_u[:steps],
        edge_v=edge_v[:steps],
        joined=joined[:steps],
        chi_num=chi_num[: steps + 1],
        tau=tau[: steps + 1],
        largest=largest[: steps + 1],
        second=second[: steps + 1],
        coupling_times=coupling_times,
        connect_time=connect_time,
        seed=seed,
    )


def extract_coupled_mc(run: GraphProcessRun) -> MergeTrace:
    """
    Multiplicative coalescent read off the graph process: F_k holds e_{I_1}, ..., e_{I_k}

    Raises:
        TruncatedRunError: the run ended before the graph was connected
    """
    if not run.connected:
        raise TruncatedRunError(
            f"run stopped after {run.steps} edges with {len(run.coupling_times)} of {run.n} coupling times"
        )
    forest = forest_ops.new_forest(run.n)
    trace = MergeTrace(n=run.n, kernel=KernelKind.MULTIPLICATIVE)
    for m in run.coupling_times[1:]:
        choices = forest_ops.mc_choice_count(forest)
        u, v = int(run.edge_u[m - 1]), int(run.edge_v[m - 1])
        trace.records.append(forest_ops.merge(forest, u, v, choices=choices))
    return trace


def coupled_identity_check(run: GraphProcessRun, trace: Optional[MergeTrace] = None) -> bool:
    """
    chi(F_k) = chi(G_{I_k}) for every k, and the log-sum over the chain equals
    the log-sum over joining steps of the graph process, term by term
    """
    trace = extract_coupled_mc(run) if trace is None else trace
    n = run.n
    chain = _coupled_sum_sq(trace)
    graph = [int(run.chi_num[m]) for m in run.coupling_times]
    if chain != graph:
        return False
    # terms 1 - chi/n taken before each joining edge
    pre_join = run.chi_num[:-1][run.joined].tolist()
    return pre_join == [r.pre_sum_sq for r in trace.records] and len(pre_join) == n - 1


def _coupled_sum_sq(trace: MergeTrace) -> List[int]:
    """S_k of the coupled chain, k = 1..n"""
    return [r.pre_sum_sq for r in trace.records] + [trace.n * trace.n]


def chi_log_sums(run: GraphProcessRun) -> Tuple[float, float]:
    """
    (sum over the chain of ln(1 - chi(F_k)/n), sum over joining steps m of ln(1 - chi(G_m)/n))
    """
    trace = extract_coupled_mc(run)
    nn = float(run.n * run.n)
    chain = math.fsum(math.log1p(-r.pre_sum_sq / nn) for r in trace.records)
    process = math.fsum(math.log1p(-c / nn) for c in run.chi_num[:-1][run.joined].tolist())
    return chain, process


def trajectory_frame(run: GraphProcessRun, record_every: Optional[int] = None) -> pd.DataFrame:
    """Rows m, tau, chi_num, L, S for m = 0, k, 2k, ... and the final m"""
    every = settings.RECORD_EVERY if record_every is None else record_every
    if every < 1:
        raise InvalidParameterError(f"record_every must be at least 1, got {every}")
    rows = np.arange(0, run.steps + 1, every)
    if rows[-1] != run.steps:
        rows = np.append(rows, run.steps)
    return pd.DataFrame(
        {
            "m": rows,
            "tau": run.tau[rows],
            "chi_num": run.chi_num[rows],
            "L": run.largest[rows],
            "S": run.second[rows],
        }
    )


# ---------------------------------------------------------------------------
# G(n, p)
# ---------------------------------------------------------------------------

def sample_gnp(n: int, p: float, rng: np.random.Generator) -> SampledGraph:
    """
    G(n, p) by geometric skipping over the edge slots

    Gaps between present slots are geometric, so the work is proportional to
    the number of edges rather than to n^2.
    """
    if n < 1:
        raise InvalidParameterError(f"n must be at least 1, got {n}")
    _check_p(p)
    total = forest_ops.pair_count(n)
    if p == 0.0 or total == 0:
        empty = np.empty(0, dtype=np.int64)
        return SampledGraph(n=n, u=empty, v=empty.copy(), p=p)
    if p == 1.0:
        slots = np.arange(total, dtype=np.int64)
    else:
        chunks = []
        last = -1
        expected = p * total
        batch = int(expected + 5.0 * math.sqrt(expected) + 16)
        while last < total:
            positions = last + np.cumsum(rng.geometric(p, size=batch))
            chunks.append(positions[positions < total])
            last = int(positions[-1])
            batch = max(16, batch // 4)
        slots = np.concatenate(chunks)
    u, v = forest_ops.pairs_of(slots)
    return SampledGraph(n=n, u=u, v=v, p=p)


def _adjacency(graph: SampledGraph) -> sparse.csr_matrix:
    data = np.ones(graph.edge_count, dtype=np.int8)
    matrix = sparse.coo_matrix((data, (graph.u, graph.v)), shape=(graph.n, graph.n))
    return (matrix + matrix.T).tocsr()


def graph_component_sizes(graph: SampledGraph) -> np.ndarray:
    """Component sizes of a sampled graph, one entry per component"""
    _, labels = csgraph.connected_components(_adjacency(graph), directed=False)
    return np.bincount(labels)


def graph_chi_num(graph: SampledGraph) -> int:
    sizes = graph_component_sizes(graph).astype(np.int64)
    return int(np.dot(sizes, sizes))


def edge_count_conditioning_check(
    n: int,
    p: float,
    m: int,
    reps: int,
    rng: np.random.Generator,
    max_attempts: Optional[int] = None,
) -> dict:
    """
    Compare chi of G(n, p) given exactly m edges with chi of G_m

    Conditional samples are taken by rejection on the edge count. The two
    chi samples are compared with a two-sample Kolmogorov-Smirnov test.

    Returns:
        dict with statistic, pvalue, reps and the number of G(n, p) draws used
    """
    _check_p(p)
    if reps < 2:
        raise InvalidParameterError(f"reps must be at least 2, got {reps}")
    max_attempts = 2000 * reps if max_attempts is None else max_attempts
    conditioned: List[int] = []
    attempts = 0
    while len(conditioned) < reps:
        if attempts >= max_attempts:
            raise InvalidParameterError(
                f"only {len(conditioned)} of {reps} G({n}, {p}) draws had {m} edges after {attempts} attempts"
            )
        attempts += 1
        graph = sample_gnp(n, p, rng)
        if graph.edge_count == m:
            conditioned.append(graph_chi_num(graph))
    process = [int(run_graph_process(n, m_max=m, rng=rng).chi_num[m]) for _ in range(reps)]
    result = stats.ks_2samp(conditioned, process)
    return {
        "statistic": float(result.statistic),
        "pvalue": float(result.pvalue),
        "reps": reps,
        "attempts": attempts,
    }


# ---------------------------------------------------------------------------
# Exploration
# ---------------------------------------------------------------------------

class _VertexPool:
    """Undiscovered vertices with O(1) membership, removal and uniform sampling"""

    def __init__(self, vertices: Iterable[int]):
        self.items = list(vertices)
        self.position = {v: i for i, v in enumerate(self.items)}

    def __len__(self):
        return len(self.items)

    def __contains__(self, v: int) -> bool:
        return v in self.position

    def remove(self, v: int) -> None:
        i = self.position.pop(v)
        last = self.items.pop()
        if last != v:
            self.items[i] = last
            self.position[last] = i

    def take(self, count: int, rng: np.random.Generator) -> List[int]:
        """Remove and return `count` distinct vertices chosen uniformly"""
        chosen = []
        for _ in range(count):
            v = self.items[int(rng.integers(len(self.items)))]
            self.remove(v)
            chosen.append(v)
        return chosen


def _reseed_size(u: int, p: float, hit: float, rng: np.random.Generator) -> int:
    """
    Size of a Bin(u, p) draw conditioned to be non-empty

    The first success among u trials has a geometric law truncated at u; the
    trials after it are free.
    """
    v = rng.random()
    first = math.ceil(math.log1p(-v * hit) / math.log1p(-p)) if p < 1.0 else 1
    first = min(max(first, 1), u)
    return 1 + int(rng.binomial(u - first, p))


def explore(
    n: int,
    p: float,
    rng: np.random.Generator,
    graph: Optional[SampledGraph] = None,
    max_steps: Optional[int] = None,
) -> ExplorationResult:
    """
    Depth-first exploration of G(n, p) from vertex 1 with re-seeding

    Each step explores the discovered vertex of highest priority (latest
    discovery, then smallest label). Its undiscovered neighbours are discovered
    and its discovered neighbours promoted, both at priority i + 1. When nothing
    is discovered, each undiscovered vertex is discovered independently with
    probability p instead.

    A popped vertex still carrying a re-seed priority begins a new component.
    Runs of re-seeds that discover nothing are drawn at once: their length is
    geometric with success probability 1 - (1 - p)^|U|.

    With p = 0 the vertices left after the first component are reported as
    singletons concluding one after another; without `max_steps` the
    trajectory then covers n steps.

    Args:
        n: Number of vertices
        p: Edge probability
        rng: Random stream for the graph (if not given) and the re-seeding
        graph: Graph to explore; sampled from G(n, p) when None
        max_steps: Stop after this many steps

    Returns:
        ExplorationResult
    """
    if n < 1:
        raise InvalidParameterError(f"n must be at least 1, got {n}")
    _check_p(p)
    graph = sample_gnp(n, p, rng) if graph is None else graph
    adjacency = _adjacency(graph)
    indptr, indices = adjacency.indptr, adjacency.indices

    pool = _VertexPool(range(1, n))
    state = ExplorationState(explored=[], discovered={0: 0})
    heap: List[Tuple[int, int]] = [(0, 0)]
    reseed_times = {0}
    sizes: List[int] = []
    conclusion_times: List[int] = []
    u_trajectory = [len(pool)]
    step = 0

    def _conclude() -> None:
        if sizes and len(conclusion_times) < len(sizes):
            conclusion_times.append(len(state.explored))

    while len(state.explored) < n and (max_steps is None or step < max_steps):
        discovered = state.discovered
        if discovered:
            while True:
                neg_priority, v = heapq.heappop(heap)
                if discovered.get(v) == -neg_priority:
                    break
            priority = discovered.pop(v)
            if priority in reseed_times:
                _conclude()
                sizes.append(0)
            sizes[-1] += 1
            state.explored.append(v)
            fresh = step + 1
            for w in indices[indptr[v]:indptr[v + 1]].tolist():
                if w in pool:
                    pool.remove(w)
                elif w not in discovered:
                    continue
                discovered[w] = fresh
                heapq.heappush(heap, (-fresh, w))
        else:
            if p == 0.0:
                logger.warning("p = 0: exploration stops after the first component")
                break
            u = len(pool)
            hit = -math.expm1(u * math.log1p(-p)) if p < 1.0 else 1.0
            idle = int(rng.geometric(hit)) - 1
            if max_steps is not None:
                idle = min(idle, max_steps - step)
            if idle:
                step += idle
                u_trajectory.extend([u] * idle)
                if max_steps is not None and step >= max_steps:
                    break
            fresh = step + 1
            reseed_times.add(fresh)
            for w in pool.take(_reseed_size(u, p, hit, rng), rng):
                discovered[w] = fresh
                heapq.heappush(heap, (-fresh, w))
        step += 1
        u_trajectory.append(len(pool))
    # a truncated run may leave the current component unfinished
    if all(priority in reseed_times for priority in state.discovered.values()):
        _conclude()

    if p == 0.0 and len(state.explored) < n and not state.discovered:
        # no edges at all: every vertex left is its own component
        done = len(state.explored)
        remaining = len(pool)
        sizes.extend([1] * remaining)
        conclusion_times.extend(range(done + 1, done + remaining + 1))
        horizon = n if max_steps is None else max_steps
        u_trajectory.extend([remaining] * max(horizon - step, 0))

    state.undiscovered = set(pool.items)
    return ExplorationResult(
        n=n,
        p=p,
        component_sizes=sizes,
        u_trajectory=u_trajectory,
        conclusion_times=conclusion_times,
        order=list(state.explored),
        state=state,
    )


# ---------------------------------------------------------------------------
# Susceptibility
# ---------------------------------------------------------------------------

def two_largest(sizes: Sequence[int]) -> Tuple[int, int]:
    """(L, S): largest and second largest component sizes, S = 0 for one component"""
    if not sizes:
        raise InvalidParameterError("no components given")
    ordered = sorted(sizes, reverse=True)
    return ordered[0], ordered[1] if len(ordered) > 1 else 0


def susceptibility_bounds_check(sizes: Sequence[int]) -> bool:
    """L^2/n <= chi <= L^2/n + S in exact arithmetic"""
    n = sum(sizes)
    chi = Fraction(sum(s * s for s in sizes), n)
    big, runner_up = two_largest(sizes)
    floor = Fraction(big * big, n)
    return floor <= chi <= floor + runner_up


def chi_increase_probability(n: int, sum_sq: int, m: int) -> Fraction:
    """
    Probability that the next uniform new edge joins two components:
    (1 - chi/n) (1 - (n + 2m)/n^2)^{-1}
    """
    if not 0 <= m < forest_ops.pair_count(n):
        raise InvalidParameterError(f"m must lie in [0, C(n, 2)), got {m}")
    nn = n * n
    return (1 - Fraction(sum_sq, nn)) / (1 - Fraction(n + 2 * m, nn))


def direct_chi_increase_probability(n: int, sizes: Sequence[int], m: int) -> Fraction:
    """Cross-component pairs over the C(n, 2) - m pairs not yet present"""
    remaining = forest_ops.pair_count(n) - m
    if remaining <= 0 or m < 0:
        raise InvalidParameterError(f"m must lie in [0, C(n, 2)), got {m}")
    if sum(sizes) != n:
        raise InvalidParameterError("component sizes must sum to n")
    cross = 0
    seen = 0
    for s in sizes:
        cross += seen * s
        seen += s
    return Fraction(cross, remaining)


def _disconnected_after(rng: np.random.Generator, n: int, m: int) -> bool:
    return not run_graph_process(n, m_max=m, rng=rng, stop_when_connected=True).connected


def connectivity_fraction(
    n: int,
    reps: int,
    seed: int,
    m: Optional[int] = None,
    workers: Optional[int] = None,
) -> float:
    """Fraction of runs still disconnected after m edges, m = ceil(5 n ln n) by default"""
    if m is None:
        m = min(math.ceil(5 * n * math.log(n)), forest_ops.pair_count(n))
    flags = map_replicates(_disconnected_after, seed, reps, args=(n, m), workers=workers)
    return sum(flags) / reps


def _gnp_chi_fraction(rng: np.random.Generator, n: int, p: float) -> float:
    return graph_chi_num(sample_gnp(n, p, rng)) / (n * n)


def susceptibility_profile(
    n: int,
    c_values: Sequence[float],
    reps: int,
    seed: int,
    tolerance: float = 0.02,
    workers: Optional[int] = None,
) -> pd.DataFrame:
    """
    chi(G(n, c/n))/n against alpha(c)^2 for each c

    Replicate streams for the j-th c start at index j * reps.
    """
    rows = []
    for j, c in enumerate(c_values):
        if c < 0 or c > n:
            raise InvalidParameterError(f"c must lie in [0, n], got {c}")
        values = np.asarray(
            map_replicates(_gnp_chi_fraction, seed, reps, args=(n, c / n), workers=workers, offset=j * reps)
        )
        target = numerics.alpha(c) ** 2
        rows.append(
            {
                "c": c,
                "mean_chi_over_n": float(values.mean()),
                "alpha_sq": target,
                "within_tolerance": float(np.mean(np.abs(values - target) <= tolerance)),
                "reps": reps,
            }
        )
        logger.info(f"susceptibility at c={c}: mean {rows[-1]['mean_chi_over_n']:.4f} vs {target:.4f}")
    return pd.DataFrame(rows)
