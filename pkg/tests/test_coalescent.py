"""Tests for the coalescent engine: uniform, weight-driven and rate-driven runs and trace analysis."""
import logging
import math
from collections import Counter

import networkx as nx
import numpy as np
import pytest
from scipy import stats

from app.core.exceptions import DuplicateWeightError, InvalidParameterError, ZeroRateError
from app.models.kernel import KernelKind
from app.services import coalescent
from app.services import forest as forest_ops
from app.services.exact_oracle import exact_oracle
from app.services.export import export_trace_csv, export_trace_text

# Slot order is (0,1), (0,2), (1,2), (0,3), (1,3), (2,3); this order pairs {1,2}, {3,4}, then joins.
PAIRING_WEIGHTS = [0.1, 0.3, 0.4, 0.5, 0.6, 0.2]


def _pool_rare_outcomes(first: Counter, second: Counter, minimum: int = 20):
    """Merge outcomes seen fewer than `minimum` times in total into one cell"""
    rare = {k for k in set(first) | set(second) if first[k] + second[k] < minimum}
    pooled = []
    for census in (first, second):
        kept = Counter({k: c for k, c in census.items() if k not in rare})
        if rare:
            # empty tuple sorts alongside the shape tuples
            kept[()] = sum(census[k] for k in rare)
        pooled.append(kept)
    return pooled


@pytest.mark.unit
class TestRunUniform:
    """Tests for uniform-choice runs."""

    @pytest.mark.parametrize("kernel", list(KernelKind))
    def test_single_vertex_gives_empty_trace(self, kernel, rng) -> None:
        trace = coalescent.run_uniform(kernel, 1, rng)
        assert trace.records == []

    def test_additive_first_step_has_six_choices(self, rng) -> None:
        trace = coalescent.run_uniform(KernelKind.ADDITIVE, 3, rng)
        assert trace.records[0].choices == 6

    def test_multiplicative_first_step_has_three_choices(self, rng) -> None:
        trace = coalescent.run_uniform(KernelKind.MULTIPLICATIVE, 3, rng)
        assert trace.records[0].choices == 3

    def test_admissible_counts_per_kernel(self, rng) -> None:
        """Kingman i(i-1) with i trees, additive n(n-i), multiplicative the cross pairs."""
        n = 30
        kingman = coalescent.run_uniform(KernelKind.KINGMAN, n, rng)
        additive = coalescent.run_uniform(KernelKind.ADDITIVE, n, rng)
        multiplicative = coalescent.run_uniform(KernelKind.MULTIPLICATIVE, n, rng)
        for i, record in enumerate(kingman.records, start=1):
            trees = n + 1 - i
            assert record.choices == trees * (trees - 1)
        for i, record in enumerate(additive.records, start=1):
            assert record.choices == n * (n - i)
        for record in multiplicative.records:
            assert record.choices == (n * n - record.pre_sum_sq) // 2

    @pytest.mark.parametrize("kernel", list(KernelKind))
    def test_trace_shape(self, kernel, rng) -> None:
        """n - 1 records numbered 1..n-1 with strictly increasing sum_sq."""
        n = 200
        trace = coalescent.run_uniform(kernel, n, rng)
        assert [r.step for r in trace.records] == list(range(1, n))
        pre = coalescent.sum_sq_trajectory(trace)
        assert all(a < b for a, b in zip(pre, pre[1:]))
        assert pre[0] == n and pre[-1] == n * n

    def test_multiplicative_large_run_uses_two_stage_sampling(self, rng) -> None:
        """A run long past the rejection phase still ends in one tree."""
        n = 3000
        trace = coalescent.run_uniform(KernelKind.MULTIPLICATIVE, n, rng)
        tree = coalescent.final_tree(trace)
        assert tree.root == 0
        assert sum(1 for p in tree.parent if p is None) == 1

    def test_kingman_labels_decrease_towards_leaves(self, rng) -> None:
        n = 40
        trace = coalescent.run_uniform(KernelKind.KINGMAN, n, rng)
        tree = coalescent.final_tree(trace)
        labels = coalescent.decreasing_labelling_of(trace)
        assert sorted(labels[v] for v in range(n) if v != tree.root) == list(range(1, n))
        assert exact_oracle.is_decreasing_labelling(tree, labels)

    @pytest.mark.parametrize("kernel", list(KernelKind))
    def test_chain_shapes_partition_n(self, kernel, rng) -> None:
        n = 9
        shapes = coalescent.chain_shapes(coalescent.run_uniform(kernel, n, rng))
        assert shapes[0] == (1,) * n
        assert shapes[-1] == (n,)
        assert all(sum(shape) == n and len(shape) == n - i for i, shape in enumerate(shapes))


@pytest.mark.unit
class TestRunWeightDriven:
    """Tests for weight-driven runs."""

    def test_two_vertices(self) -> None:
        trace = coalescent.run_weight_driven(KernelKind.MULTIPLICATIVE, 2, [0.7])
        assert [(r.u, r.v) for r in trace.records] == [(0, 1)]

    def test_three_vertices_kruskal(self) -> None:
        """W12 < W13 < W23 adds {1,2} then {1,3}."""
        trace = coalescent.run_weight_driven(KernelKind.MULTIPLICATIVE, 3, [0.1, 0.2, 0.3])
        assert [(r.u, r.v) for r in trace.records] == [(0, 1), (0, 2)]

    def test_duplicate_weights_rejected(self) -> None:
        with pytest.raises(DuplicateWeightError):
            coalescent.run_weight_driven(KernelKind.MULTIPLICATIVE, 3, [0.1, 0.1, 0.3])

    def test_wrong_length_rejected(self) -> None:
        with pytest.raises(InvalidParameterError):
            coalescent.run_weight_driven(KernelKind.MULTIPLICATIVE, 4, [0.1, 0.2])

    def test_multiplicative_tree_is_the_mst(self, rng) -> None:
        n = 25
        weights = rng.random(forest_ops.pair_count(n))
        trace = coalescent.run_weight_driven(KernelKind.MULTIPLICATIVE, n, weights)
        graph = nx.Graph()
        for k, w in enumerate(weights.tolist()):
            graph.add_edge(*forest_ops.pair_of(k), weight=w)
        expected = {tuple(sorted(e)) for e in nx.minimum_spanning_tree(graph).edges()}
        assert {tuple(sorted((r.u, r.v))) for r in trace.records} == expected

    def test_oriented_kernels_need_square_weights(self, rng) -> None:
        with pytest.raises(InvalidParameterError):
            coalescent.run_weight_driven(KernelKind.ADDITIVE, 4, rng.random(6))

    @pytest.mark.parametrize("kernel", [KernelKind.KINGMAN, KernelKind.ADDITIVE])
    def test_oriented_runs_give_rooted_trees(self, kernel, rng) -> None:
        n = 15
        trace = coalescent.run_weight_driven(kernel, n, rng=rng)
        assert len(trace.records) == n - 1
        tree = coalescent.final_tree(trace)
        assert forest_ops.subtree_sizes(tree)[tree.root] == n

    def test_kingman_merges_roots_only(self, rng) -> None:
        n = 12
        trace = coalescent.run_weight_driven(KernelKind.KINGMAN, n, rng.random((n, n)))
        attached = set()
        for r in trace.records:
            assert r.u not in attached and r.v not in attached
            attached.add(r.v)

    def test_deterministic_given_weights(self, rng) -> None:
        weights = rng.random(forest_ops.pair_count(10))
        first = coalescent.run_weight_driven(KernelKind.MULTIPLICATIVE, 10, weights)
        second = coalescent.run_weight_driven(KernelKind.MULTIPLICATIVE, 10, weights.copy())
        assert first.records == second.records


@pytest.mark.unit
class TestRunRateDriven:
    """Tests for rate-driven runs."""

    def test_two_vertices(self, rng) -> None:
        trace = coalescent.run_rate_driven(KernelKind.MULTIPLICATIVE, 2, [5.0], rng)
        assert len(trace.records) == 1

    def test_zero_rates_rejected(self, rng) -> None:
        with pytest.raises(ZeroRateError):
            coalescent.run_rate_driven(KernelKind.MULTIPLICATIVE, 3, [0.0, 0.0, 0.0], rng)

    def test_zero_rate_later_in_the_run(self, rng) -> None:
        """Only (1,2) can ever fire, so the second step is stuck."""
        with pytest.raises(ZeroRateError):
            coalescent.run_rate_driven(KernelKind.MULTIPLICATIVE, 3, [1.0, 0.0, 0.0], rng)

    def test_negative_rates_rejected(self, rng) -> None:
        with pytest.raises(InvalidParameterError):
            coalescent.run_rate_driven(KernelKind.MULTIPLICATIVE, 3, [1.0, -1.0, 1.0], rng)

    @pytest.mark.statistical
    def test_first_step_probability_is_proportional_to_rate(self, rng) -> None:
        """Additive n=3: P(first edge is (1,2)) = X_(1,2) / sum of the six rates."""
        rates = np.array([[0.0, 3.0, 1.0], [2.0, 0.0, 1.0], [1.0, 1.0, 0.0]])
        reps = 4000
        hits = 0
        for _ in range(reps):
            first = coalescent.run_rate_driven(KernelKind.ADDITIVE, 3, rates, rng).records[0]
            hits += (first.u, first.v) == (0, 1)
        result = stats.binomtest(hits, reps, 3.0 / 9.0)
        assert result.pvalue > 1e-3


@pytest.mark.unit
class TestEmpiricalPartition:
    """Tests for the empirical multiplicative partition function."""

    def test_k_one_is_empty_product(self, rng) -> None:
        trace = coalescent.run_uniform(KernelKind.MULTIPLICATIVE, 5, rng)
        assert coalescent.empirical_log_partition(trace, 1).log_z_arrow == 0.0

    def test_n_three_k_two(self, rng) -> None:
        trace = coalescent.run_uniform(KernelKind.MULTIPLICATIVE, 3, rng)
        assert coalescent.empirical_log_partition(trace, 2).log_z_arrow == pytest.approx(math.log(6))

    def test_pairing_chain(self) -> None:
        """Terms 12, 10, 8 give Z = 960 / 8 = 120."""
        trace = coalescent.run_weight_driven(KernelKind.MULTIPLICATIVE, 4, PAIRING_WEIGHTS)
        assert coalescent.chain_shapes(trace) == [(1, 1, 1, 1), (2, 1, 1), (2, 2), (4,)]
        value = coalescent.empirical_log_partition(trace, 4)
        assert value.log_z == pytest.approx(math.log(120))
        assert coalescent.exact_empirical_partition(trace, 4) == 120

    def test_log_and_exact_forms_agree(self, rng) -> None:
        n = 40
        trace = coalescent.run_uniform(KernelKind.MULTIPLICATIVE, n, rng)
        exact = coalescent.exact_empirical_partition(trace, n)
        logged = coalescent.empirical_log_partition(trace, n).log_z
        assert logged == pytest.approx(math.log(exact.numerator) - math.log(exact.denominator), rel=1e-12)

    def test_other_kernels_rejected(self, rng) -> None:
        trace = coalescent.run_uniform(KernelKind.ADDITIVE, 4, rng)
        with pytest.raises(InvalidParameterError):
            coalescent.empirical_log_partition(trace, 2)

    def test_k_above_n_rejected(self, rng) -> None:
        trace = coalescent.run_uniform(KernelKind.MULTIPLICATIVE, 4, rng)
        with pytest.raises(InvalidParameterError):
            coalescent.empirical_log_partition(trace, 5)


@pytest.mark.unit
class TestAdditiveConstant:
    """Tests for the constant empirical partition function of the additive coalescent."""

    @pytest.mark.parametrize("n,k", [(2, 2), (3, 3), (5, 3), (12, 12)])
    def test_product_of_counts(self, n, k, rng) -> None:
        trace = coalescent.run_uniform(KernelKind.ADDITIVE, n, rng)
        assert coalescent.additive_empirical_constant_check(trace, k)

    def test_replay_without_recorded_counts(self) -> None:
        """Weight-driven traces carry no counts; the check replays them."""
        n = 6
        weights = np.arange(n * n, dtype=float).reshape(n, n)
        trace = coalescent.run_weight_driven(KernelKind.ADDITIVE, n, weights)
        assert coalescent.additive_empirical_constant_check(trace)


@pytest.mark.unit
class TestTraceExports:
    def test_columns(self, rng) -> None:
        trace = coalescent.run_uniform(KernelKind.MULTIPLICATIVE, 5, rng)
        lines = export_trace_csv(trace).splitlines()
        assert lines[0] == "step,u,v,size_a,size_b,pre_sum_sq"
        assert len(lines) == 5

    def test_text_export_of_an_unrooted_run(self) -> None:
        trace = coalescent.run_weight_driven(KernelKind.MULTIPLICATIVE, 3, [0.1, 0.2, 0.3])
        assert export_trace_text(trace) == "n=3 root=none\n1 2 1\n1 3 2\n"

    def test_text_export_of_a_rooted_run(self, rng) -> None:
        trace = coalescent.run_uniform(KernelKind.ADDITIVE, 4, rng)
        header = export_trace_text(trace).splitlines()[0]
        assert header == f"n=4 root={trace.final_root + 1}"


@pytest.mark.statistical
class TestChainLaws:
    """Weight-driven and rate-driven runs against uniform runs."""

    N = 5
    REPS = 3000

    def _uniform_shapes(self, make_rng):
        rng = make_rng(1)
        return Counter(
            tuple(coalescent.chain_shapes(coalescent.run_uniform(KernelKind.MULTIPLICATIVE, self.N, rng)))
            for _ in range(self.REPS)
        )

    def test_uniform_weights_match_uniform_choice(self, make_rng) -> None:
        rng = make_rng(2)
        driven = Counter(
            tuple(coalescent.chain_shapes(coalescent.run_weight_driven(KernelKind.MULTIPLICATIVE, self.N, rng=rng)))
            for _ in range(self.REPS)
        )
        _, pvalue = exact_oracle.census_difference(self._uniform_shapes(make_rng), driven)
        assert pvalue > 1e-3

    def test_equal_rates_match_uniform_choice(self, make_rng) -> None:
        rng = make_rng(3)
        rates = np.ones(forest_ops.pair_count(self.N))
        driven = Counter(
            tuple(coalescent.chain_shapes(coalescent.run_rate_driven(KernelKind.MULTIPLICATIVE, self.N, rates, rng)))
            for _ in range(self.REPS)
        )
        _, pvalue = exact_oracle.census_difference(self._uniform_shapes(make_rng), driven)
        assert pvalue > 1e-3

    def test_two_stage_sampling_matches_weight_driven_runs(self, make_rng, caplog) -> None:
        """At n = 8 every uniform run finishes in the two-stage cross-pair regime."""
        n, reps = 8, 20000
        uniform_rng, driven_rng = make_rng(11), make_rng(12)
        with caplog.at_level(logging.DEBUG, logger="app.services.coalescent"):
            uniform = Counter(
                tuple(coalescent.chain_shapes(coalescent.run_uniform(KernelKind.MULTIPLICATIVE, n, uniform_rng)))
                for _ in range(reps)
            )
        assert any("two-stage" in message for message in caplog.messages)
        driven = Counter(
            tuple(coalescent.chain_shapes(coalescent.run_weight_driven(KernelKind.MULTIPLICATIVE, n, rng=driven_rng)))
            for _ in range(reps)
        )
        _, pvalue = exact_oracle.census_difference(*_pool_rare_outcomes(uniform, driven))
        assert pvalue > 1e-3


@pytest.mark.statistical
class TestCayleyUniformity:
    """The additive coalescent's final rooted tree is uniform over the n^{n-1} rooted trees."""

    def test_n_four_moderate(self, make_rng) -> None:
        census = exact_oracle.tree_census(KernelKind.ADDITIVE, 4, 12800, make_rng(4))
        assert len(census) <= 64
        _, pvalue = exact_oracle.census_uniformity(census, 64)
        assert pvalue > 1e-3

    @pytest.mark.slow
    def test_n_four_full_scale(self, make_rng) -> None:
        census = exact_oracle.tree_census(KernelKind.ADDITIVE, 4, 100000, make_rng(5))
        assert len(census) == 64
        _, pvalue = exact_oracle.census_uniformity(census, 64)
        assert pvalue > 1e-3
