"""
Exact oracles
Partition functions by labeled-chain enumeration and by shape DP, closed
forms, Renyi forest counts, labelling counts, tree enumeration and the
essential supremum of the empirical multiplicative partition function.
Everything here is exact integer or rational arithmetic.
"""
import heapq
import logging
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction
from functools import lru_cache
from itertools import permutations, repeat
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

import numpy as np
from scipy import stats

from app.core.exceptions import (
    InvalidParameterError,
    NonIntegralCountError,
    UnsupportedSizeError,
)
from app.models.forest import RootedTree
from app.models.kernel import KernelKind
from app.models.oracle import ChainWeightState
from app.schemas.verification import VerificationCell
from app.services import coalescent
from app.services import forest as forest_ops

logger = logging.getLogger(__name__)

BRUTE_FORCE_MAX_N = 8
DP_MAX_N = 60
ESS_SUP_MAX_P = 20
LABELLING_BRUTE_MAX_N = 7
CENSUS_MAX_N = 5

Blocks = Tuple[Tuple[int, int], ...]


def _check_nk(n: int, k: Optional[int]) -> int:
    if n < 1:
        raise InvalidParameterError(f"n must be at least 1, got {n}")
    k = n if k is None else k
    if not 1 <= k <= n:
        raise InvalidParameterError(f"k must lie in [1, {n}], got {k}")
    return k


def _merges(blocks: Blocks) -> Iterator[Tuple[int, int, Blocks]]:
    """Every unordered pair of blocks (mask, size) with the partition after merging them"""
    count = len(blocks)
    for i in range(count):
        mi, si = blocks[i]
        for j in range(i + 1, count):
            mj, sj = blocks[j]
            rest = blocks[:i] + blocks[i + 1:j] + blocks[j + 1:]
            yield si, sj, rest + ((mi | mj, si + sj),)


def _chain_weight_sum(blocks: Blocks, steps: int, kernel: Optional[KernelKind]) -> int:
    """Sum over labeled chain continuations of the product of merge weights (1 each if no kernel)"""
    if steps == 0:
        return 1
    total = 0
    for a, b, nxt in _merges(blocks):
        w = 1 if kernel is None else kernel.weight(a, b)
        total += w * _chain_weight_sum(nxt, steps - 1, kernel)
    return total


def _first_merge_branch(blocks: Blocks, steps: int, kernel: Optional[KernelKind], a: int, b: int) -> int:
    w = 1 if kernel is None else kernel.weight(a, b)
    return w * _chain_weight_sum(blocks, steps, kernel)


def _singletons(n: int) -> Blocks:
    return tuple((1 << v, 1) for v in range(n))


def _enumerate_chains(n: int, k: int, kernel: Optional[KernelKind], workers: int) -> int:
    if n > BRUTE_FORCE_MAX_N:
        raise UnsupportedSizeError(f"chain enumeration is limited to n <= {BRUTE_FORCE_MAX_N}, got {n}")
    if k == 1:
        return 1
    branches = list(_merges(_singletons(n)))
    sizes_a = [a for a, _, _ in branches]
    sizes_b = [b for _, b, _ in branches]
    states = [s for _, _, s in branches]
    if workers <= 1:
        parts = map(_first_merge_branch, states, repeat(k - 2), repeat(kernel), sizes_a, sizes_b)
        return sum(parts)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return sum(pool.map(_first_merge_branch, states, repeat(k - 2), repeat(kernel), sizes_a, sizes_b))


def _falling(x: int, j: int) -> int:
    """(x)_j = x (x-1) ... (x-j+1), zero once a factor hits zero"""
    if j <= 0:
        return 1
    if j > x >= 0:
        return 0
    return math.perm(x, j)


def _balanced_product(values: Sequence[int]) -> int:
    if not values:
        return 1
    if len(values) == 1:
        return values[0]
    mid = len(values) // 2
    return _balanced_product(values[:mid]) * _balanced_product(values[mid:])


def _prufer_decode(sequence: Sequence[int], n: int) -> List[Tuple[int, int]]:
    degree = [1] * n
    for x in sequence:
        degree[x] += 1
    leaves = [v for v in range(n) if degree[v] == 1]
    heapq.heapify(leaves)
    edges = []
    for x in sequence:
        leaf = heapq.heappop(leaves)
        edges.append((leaf, x))
        degree[x] -= 1
        if degree[x] == 1:
            heapq.heappush(leaves, x)
    u = heapq.heappop(leaves)
    v = heapq.heappop(leaves)
    edges.append((u, v))
    return edges


class ExactOracle:
    """Exact combinatorial ground truth for the three coalescents"""

    # ------------------------------------------------------------------
    # Partition functions
    # ------------------------------------------------------------------

    @staticmethod
    def brute_force_partition_function(
        kernel: KernelKind,
        n: int,
        k: Optional[int] = None,
        workers: int = 1,
    ) -> int:
        """
        Sum over labeled chains of length k of the product of kernel weights

        Depth-first over set partitions held as bitmasks, one branch per first
        merge (branches can run in separate processes).

        Raises:
            UnsupportedSizeError: n > 8
        """
        k = _check_nk(n, k)
        return _enumerate_chains(n, k, kernel, workers)

    @staticmethod
    def dp_states(kernel: KernelKind, n: int, steps: int) -> List[ChainWeightState]:
        """Shape-level states after `steps` merges with the summed chain weight reaching each"""
        if n > DP_MAX_N:
            raise UnsupportedSizeError(f"shape DP is limited to n <= {DP_MAX_N}, got {n}")
        states: Dict[Tuple[int, ...], int] = {(1,) * n: 1}
        for _ in range(steps):
            nxt: Dict[Tuple[int, ...], int] = {}
            for shape, weight in states.items():
                counts = Counter(shape)
                sizes = sorted(counts)
                for i, a in enumerate(sizes):
                    for b in sizes[i:]:
                        if a == b:
                            pairs = counts[a] * (counts[a] - 1) // 2
                        else:
                            pairs = counts[a] * counts[b]
                        if pairs == 0:
                            continue
                        parts = list(shape)
                        parts.remove(a)
                        parts.remove(b)
                        parts.append(a + b)
                        key = tuple(sorted(parts, reverse=True))
                        nxt[key] = nxt.get(key, 0) + weight * pairs * kernel.weight(a, b)
            states = nxt
        return [ChainWeightState(shape=s, weight=w) for s, w in sorted(states.items())]

    @staticmethod
    def dp_partition_function(kernel: KernelKind, n: int, k: Optional[int] = None) -> int:
        """Same sum as the brute force, by dynamic programming over partition shapes"""
        k = _check_nk(n, k)
        return sum(state.weight for state in ExactOracle.dp_states(kernel, n, k - 1))

    @staticmethod
    def closed_form_z(kernel: KernelKind, n: int, k: Optional[int] = None) -> int:
        """
        Closed forms: Kingman (n)_{k-1} (n-1)_{k-1}, additive n^{k-1} (n-1)_{k-1},
        multiplicative u_{n,k} (k-1)!
        """
        k = _check_nk(n, k)
        if kernel is KernelKind.KINGMAN:
            return _falling(n, k - 1) * _falling(n - 1, k - 1)
        if kernel is KernelKind.ADDITIVE:
            return n ** (k - 1) * _falling(n - 1, k - 1)
        return ExactOracle.renyi_forest_count(n, k) * math.factorial(k - 1)

    @staticmethod
    def renyi_forest_count(n: int, k: int) -> int:
        """
        Number of forests on n labeled vertices with k - 1 edges

        Evaluated with integers after clearing the (2n)^i denominators; the
        result must come out integral.

        Raises:
            NonIntegralCountError: the evaluation is not an integer
        """
        k = _check_nk(n, k)
        top = n + 1 - k
        two_n = 2 * n
        total = 0
        for i in range(top + 1):
            term = math.comb(top, i) * (top + i) * _falling(k - 1, i) * two_n ** (top - i)
            total += -term if i % 2 else term
        value = Fraction(math.comb(n, top) * total, two_n ** top) * Fraction(n) ** (k - 2)
        if value.denominator != 1:
            raise NonIntegralCountError(f"forest count for n={n}, k={k} evaluated to {value}")
        return value.numerator

    # ------------------------------------------------------------------
    # Chains, forests and labellings
    # ------------------------------------------------------------------

    @staticmethod
    def chain_count(n: int) -> int:
        """(n!)^2 / (n 2^{n-1})"""
        if n < 1:
            raise InvalidParameterError(f"n must be at least 1, got {n}")
        numerator = math.factorial(n) ** 2
        denominator = n * 2 ** (n - 1)
        if numerator % denominator:
            raise NonIntegralCountError(f"chain count for n={n} is not integral")
        return numerator // denominator

    @staticmethod
    def brute_force_chain_count(n: int, workers: int = 1) -> int:
        return _enumerate_chains(n, n, None, workers)

    @staticmethod
    def ordered_forest_count(n: int, trees: int) -> int:
        """Rooted forests on [n] with `trees` trees listed in order: l (n)_l n^{n-l-1}"""
        if not 1 <= trees <= n:
            raise InvalidParameterError(f"tree count must lie in [1, {n}], got {trees}")
        numerator = trees * math.perm(n, trees) * n ** (n - trees)
        if numerator % n:
            raise NonIntegralCountError(f"ordered forest count for n={n}, l={trees} is not integral")
        return numerator // n

    @staticmethod
    def brute_force_ordered_forest_count(n: int, trees: int) -> int:
        """Count parent maps without cycles having `trees` roots, times trees!"""
        if n > CENSUS_MAX_N + 1:
            raise UnsupportedSizeError(f"forest enumeration is limited to n <= {CENSUS_MAX_N + 1}")
        count = 0
        for choice in np.ndindex(*([n] * n)):
            # choice[v] == v marks a root
            if sum(1 for v in range(n) if choice[v] == v) != trees:
                continue
            if all(_reaches_root(choice, v) for v in range(n)):
                count += 1
        return count * math.factorial(trees)

    @staticmethod
    def decreasing_labelling_count(tree: RootedTree) -> int:
        """prod over v of (|T_v| - 1)! / prod over children u of |T_u|!"""
        sizes = forest_ops.subtree_sizes(tree)
        children = forest_ops.children_lists(tree)
        count = 1
        for v in range(tree.n):
            ways = math.factorial(sizes[v] - 1)
            for u in children[v]:
                ways //= math.factorial(sizes[u])
            count *= ways
        return count

    @staticmethod
    def is_decreasing_labelling(tree: RootedTree, labels: Sequence[int]) -> bool:
        """
        labels[v] is the label of the edge from v to its parent; labels must
        decrease along every root-to-leaf path
        """
        for v, p in enumerate(tree.parent):
            if p is None or tree.parent[p] is None:
                continue
            if labels[v] >= labels[p]:
                return False
        return True

    @staticmethod
    def brute_force_decreasing_labellings(tree: RootedTree) -> int:
        if tree.n > LABELLING_BRUTE_MAX_N:
            raise UnsupportedSizeError(f"labelling enumeration is limited to n <= {LABELLING_BRUTE_MAX_N}")
        non_root = [v for v in range(tree.n) if v != tree.root]
        labels = [0] * tree.n
        count = 0
        for perm in permutations(range(1, tree.n)):
            for v, label in zip(non_root, perm):
                labels[v] = label
            if ExactOracle.is_decreasing_labelling(tree, labels):
                count += 1
        return count

    @staticmethod
    def enumerate_labeled_trees(n: int) -> Iterator[List[Tuple[int, int]]]:
        """All n^{n-2} labeled trees on 0..n-1 as edge lists, via Prufer sequences"""
        if n < 1:
            raise InvalidParameterError(f"n must be at least 1, got {n}")
        if n == 1:
            yield []
            return
        if n == 2:
            yield [(0, 1)]
            return
        for sequence in np.ndindex(*([n] * (n - 2))):
            yield _prufer_decode(sequence, n)

    @staticmethod
    def labelled_history_total(n: int) -> int:
        """Sum of decreasing-labelling counts over all n^{n-1} labeled rooted trees"""
        total = 0
        for edges in ExactOracle.enumerate_labeled_trees(n):
            for root in range(n):
                tree = forest_ops.tree_from_edges(n, edges, root)
                total += ExactOracle.decreasing_labelling_count(tree)
        return total

    # ------------------------------------------------------------------
    # Essential supremum of the empirical partition function
    # ------------------------------------------------------------------

    @staticmethod
    def ess_sup_zmc(p: int) -> Fraction:
        """
        Largest value of 2^{-(n-1)} prod (n^2 - S_i) over chains, n = 2^p

        Attained by merging blocks pairwise level by level.
        """
        if not 1 <= p <= ESS_SUP_MAX_P:
            raise UnsupportedSizeError(f"exponent must lie in [1, {ESS_SUP_MAX_P}], got {p}")
        n = 1 << p
        factors = []
        for k in range(1, p + 1):
            half = 1 << (k - 1)
            step = 1 << k
            for j in range(n // step):
                factors.append(n * n - half * (n + j * step))
        return Fraction(_balanced_product(factors), 2 ** (n - 1))

    @staticmethod
    def brute_force_ess_sup(n: int) -> Fraction:
        """2^{-(n-1)} max over all labeled chains of prod (n^2 - S_i)"""
        if n < 2 or n > BRUTE_FORCE_MAX_N:
            raise UnsupportedSizeError(f"brute-force maximum is limited to 2 <= n <= {BRUTE_FORCE_MAX_N}")
        nn = n * n

        @lru_cache(maxsize=None)
        def best(blocks: Blocks) -> int:
            if len(blocks) == 1:
                return 1
            factor = nn - sum(s * s for _, s in blocks)
            top = 0
            for _, _, nxt in _merges(blocks):
                top = max(top, best(tuple(sorted(nxt))))
            return factor * top

        return Fraction(best(_singletons(n)), 2 ** (n - 1))

    @staticmethod
    def ess_sup_ratio(p: int) -> float:
        """ess sup over 2^{-(n-1)} n^{2(n-1)} e^{-log2 n}; reported, not asserted"""
        n = 1 << p
        value = ExactOracle.ess_sup_zmc(p)
        log_value = math.log(value.numerator) - math.log(value.denominator)
        log_reference = -(n - 1) * math.log(2) + 2 * (n - 1) * math.log(n) - p
        return math.exp(log_value - log_reference)

    # ------------------------------------------------------------------
    # Tree census
    # ------------------------------------------------------------------

    @staticmethod
    def canonical_rooted(tree: RootedTree) -> Tuple[int, ...]:
        """Parent array, 1-based, 0 marking the root"""
        return tuple(0 if p is None else p + 1 for p in tree.parent)

    @staticmethod
    def canonical_unrooted(n: int, edges: Sequence[Tuple[int, int]]) -> Tuple[int, ...]:
        """Lexicographically smallest rooted encoding over all choices of root"""
        return min(
            ExactOracle.canonical_rooted(forest_ops.tree_from_edges(n, edges, root))
            for root in range(n)
        )

    @staticmethod
    def tree_census(
        kernel: KernelKind,
        n: int,
        reps: int,
        rng: np.random.Generator,
        rooted: bool = True,
    ) -> Counter:
        """
        Frequencies of the final tree over `reps` uniform runs

        Oriented kernels are encoded rooted unless `rooted` is False; the
        multiplicative tree is always encoded unrooted.
        """
        if n > CENSUS_MAX_N:
            raise UnsupportedSizeError(f"tree census is limited to n <= {CENSUS_MAX_N}, got {n}")
        census: Counter = Counter()
        for _ in range(reps):
            trace = coalescent.run_uniform(kernel, n, rng)
            edges = [(r.u, r.v) for r in trace.records]
            if rooted and kernel is not KernelKind.MULTIPLICATIVE:
                key = ExactOracle.canonical_rooted(coalescent.final_tree(trace))
            else:
                key = ExactOracle.canonical_unrooted(n, edges)
            census[key] += 1
        return census

    @staticmethod
    def census_uniformity(census: Counter, support: int) -> Tuple[float, float]:
        """Chi-square statistic and p-value of the census against uniform over `support` outcomes"""
        observed = list(census.values()) + [0] * (support - len(census))
        result = stats.chisquare(observed)
        return float(result.statistic), float(result.pvalue)

    @staticmethod
    def census_difference(first: Counter, second: Counter) -> Tuple[float, float]:
        """Chi-square two-sample test on the union of observed outcomes"""
        keys = sorted(set(first) | set(second))
        table = np.array([[first.get(k, 0) for k in keys], [second.get(k, 0) for k in keys]])
        statistic, pvalue, _, _ = stats.chi2_contingency(table)
        return float(statistic), float(pvalue)

    # ------------------------------------------------------------------
    # Verification matrix
    # ------------------------------------------------------------------

    @staticmethod
    def verification_matrix(n_max: int, brute_force_max: int = 7, workers: int = 1) -> List[VerificationCell]:
        """
        Brute force (n <= brute_force_max), shape DP and closed form for every
        kernel, 1 <= k <= n <= n_max
        """
        if n_max < 1:
            raise InvalidParameterError(f"n_max must be at least 1, got {n_max}")
        cells = []
        for kernel in KernelKind:
            for n in range(1, n_max + 1):
                for k in range(1, n + 1):
                    brute = None
                    if n <= min(brute_force_max, BRUTE_FORCE_MAX_N):
                        brute = ExactOracle.brute_force_partition_function(kernel, n, k, workers=workers)
                    dp = ExactOracle.dp_partition_function(kernel, n, k)
                    closed = ExactOracle.closed_form_z(kernel, n, k)
                    passed = dp == closed and (brute is None or brute == closed)
                    if not passed:
                        logger.warning(f"{kernel.value} n={n} k={k}: brute={brute} dp={dp} closed={closed}")
                    cells.append(
                        VerificationCell(
                            kernel=kernel,
                            n=n,
                            k=k,
                            brute_force=brute,
                            dynamic_programming=dp,
                            closed_form=closed,
                            passed=passed,
                        )
                    )
        return cells


def _reaches_root(choice: Sequence[int], v: int) -> bool:
    for _ in range(len(choice)):
        if choice[v] == v:
            return True
        v = choice[v]
    return choice[v] == v


exact_oracle = ExactOracle()
