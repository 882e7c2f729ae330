"""Tests for the exact oracle: partition functions, counting identities, the maximal chain and tree censuses."""
import math
from collections import Counter
from fractions import Fraction

import pytest

from app.core.exceptions import InvalidParameterError, UnsupportedSizeError
from app.models.forest import RootedTree
from app.models.kernel import KernelKind
from app.services import forest as forest_ops
from app.services.exact_oracle import exact_oracle


@pytest.mark.unit
class TestPartitionFunctions:
    """Brute force, shape DP and closed forms agree."""

    @pytest.mark.parametrize("kernel", list(KernelKind))
    def test_three_way_agreement_up_to_six(self, kernel) -> None:
        for n in range(1, 7):
            for k in range(1, n + 1):
                closed = exact_oracle.closed_form_z(kernel, n, k)
                assert exact_oracle.dp_partition_function(kernel, n, k) == closed
                assert exact_oracle.brute_force_partition_function(kernel, n, k) == closed

    @pytest.mark.slow
    @pytest.mark.parametrize("kernel", list(KernelKind))
    def test_brute_force_at_eight(self, kernel) -> None:
        assert exact_oracle.brute_force_partition_function(kernel, 8, 8) == exact_oracle.closed_form_z(kernel, 8, 8)

    @pytest.mark.parametrize("kernel", list(KernelKind))
    def test_dp_against_closed_form_to_forty(self, kernel) -> None:
        for n in (10, 25, 40):
            for k in (2, n // 2, n):
                assert exact_oracle.dp_partition_function(kernel, n, k) == exact_oracle.closed_form_z(kernel, n, k)

    def test_small_values(self) -> None:
        assert exact_oracle.closed_form_z(KernelKind.KINGMAN, 2, 2) == 2
        assert exact_oracle.closed_form_z(KernelKind.ADDITIVE, 3, 2) == 6
        assert exact_oracle.closed_form_z(KernelKind.MULTIPLICATIVE, 3, 2) == 3
        assert exact_oracle.closed_form_z(KernelKind.MULTIPLICATIVE, 4, 1) == 1

    def test_parallel_brute_force(self) -> None:
        serial = exact_oracle.brute_force_partition_function(KernelKind.ADDITIVE, 6, 5)
        assert exact_oracle.brute_force_partition_function(KernelKind.ADDITIVE, 6, 5, workers=2) == serial

    def test_size_limits(self) -> None:
        with pytest.raises(UnsupportedSizeError):
            exact_oracle.brute_force_partition_function(KernelKind.KINGMAN, 9)
        with pytest.raises(UnsupportedSizeError):
            exact_oracle.dp_partition_function(KernelKind.KINGMAN, 61)

    def test_k_out_of_range(self) -> None:
        with pytest.raises(InvalidParameterError):
            exact_oracle.closed_form_z(KernelKind.ADDITIVE, 4, 5)

    def test_dp_states_at_the_end(self) -> None:
        states = exact_oracle.dp_states(KernelKind.MULTIPLICATIVE, 4, 3)
        assert [s.shape for s in states] == [(4,)]
        assert states[0].weight == exact_oracle.closed_form_z(KernelKind.MULTIPLICATIVE, 4, 4)


@pytest.mark.unit
class TestRenyiForests:
    """Tests for the forest count u_{n,k}."""

    def test_examples(self) -> None:
        assert exact_oracle.renyi_forest_count(4, 4) == 16
        assert exact_oracle.renyi_forest_count(4, 2) == 6
        assert exact_oracle.renyi_forest_count(4, 1) == 1

    @pytest.mark.parametrize("n", [2, 3, 5, 9, 30])
    def test_spanning_trees_are_cayley(self, n) -> None:
        assert exact_oracle.renyi_forest_count(n, n) == n ** (n - 2)

    def test_single_edge_forests(self) -> None:
        assert exact_oracle.renyi_forest_count(12, 2) == math.comb(12, 2)

    def test_matches_tree_enumeration_for_spanning_forests(self) -> None:
        assert sum(1 for _ in exact_oracle.enumerate_labeled_trees(6)) == exact_oracle.renyi_forest_count(6, 6)


@pytest.mark.unit
class TestCountingIdentities:
    """Chains, ordered forests, decreasing labellings and labeled trees."""

    @pytest.mark.parametrize("n", range(1, 8))
    def test_chain_count(self, n) -> None:
        assert exact_oracle.brute_force_chain_count(n) == exact_oracle.chain_count(n)

    @pytest.mark.slow
    def test_chain_count_at_eight(self) -> None:
        assert exact_oracle.brute_force_chain_count(8, workers=2) == exact_oracle.chain_count(8)

    def test_chain_count_examples(self) -> None:
        assert exact_oracle.chain_count(3) == 3
        assert exact_oracle.chain_count(4) == 18

    @pytest.mark.parametrize("n", range(1, 6))
    def test_ordered_forests(self, n) -> None:
        for trees in range(1, n + 1):
            assert exact_oracle.brute_force_ordered_forest_count(n, trees) == exact_oracle.ordered_forest_count(n, trees)

    def test_ordered_forest_extremes(self) -> None:
        assert exact_oracle.ordered_forest_count(5, 1) == 5 ** 4
        assert exact_oracle.ordered_forest_count(5, 5) == math.factorial(5)

    def test_labelling_count_path_and_star(self) -> None:
        path = RootedTree(n=4, parent=[None, 0, 1, 2], root=0)
        star = RootedTree(n=4, parent=[None, 0, 0, 0], root=0)
        assert exact_oracle.decreasing_labelling_count(path) == 1
        assert exact_oracle.decreasing_labelling_count(star) == 6

    def test_labelling_count_matches_brute_force(self, rng) -> None:
        for n in range(2, 8):
            trees = list(exact_oracle.enumerate_labeled_trees(n))
            for _ in range(5):
                edges = trees[int(rng.integers(len(trees)))]
                tree = forest_ops.tree_from_edges(n, edges, int(rng.integers(n)))
                assert exact_oracle.brute_force_decreasing_labellings(tree) == exact_oracle.decreasing_labelling_count(tree)

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_labelled_history_total(self, n) -> None:
        assert exact_oracle.labelled_history_total(n) == math.factorial(n) * math.factorial(n - 1)

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5, 6])
    def test_prufer_enumeration(self, n) -> None:
        trees = list(exact_oracle.enumerate_labeled_trees(n))
        assert len(trees) == max(1, n ** (n - 2))
        assert len({frozenset(map(frozenset, t)) for t in trees}) == len(trees)
        assert all(len(t) == n - 1 for t in trees)


@pytest.mark.unit
class TestEssSup:
    """Tests for the maximum of the empirical multiplicative partition function."""

    def test_four(self) -> None:
        assert exact_oracle.ess_sup_zmc(2) == 120
        assert exact_oracle.brute_force_ess_sup(4) == Fraction(120)

    def test_two(self) -> None:
        assert exact_oracle.ess_sup_zmc(1) == exact_oracle.brute_force_ess_sup(2) == 1

    def test_eight(self) -> None:
        assert exact_oracle.brute_force_ess_sup(8) == exact_oracle.ess_sup_zmc(3)

    def test_odd_sizes_are_bounded_by_the_pairing_chain(self) -> None:
        """The maximum is at least the value of any chain, e.g. the one absorbing singletons."""
        for n in (3, 5, 6):
            nn = n * n
            absorbing = Fraction(math.prod(nn - (i * i + (n - i)) for i in range(1, n)), 2 ** (n - 1))
            assert exact_oracle.brute_force_ess_sup(n) >= absorbing

    def test_ratio_is_positive(self) -> None:
        assert exact_oracle.ess_sup_ratio(4) > 0

    def test_limits(self) -> None:
        with pytest.raises(UnsupportedSizeError):
            exact_oracle.ess_sup_zmc(0)
        with pytest.raises(UnsupportedSizeError):
            exact_oracle.brute_force_ess_sup(9)


@pytest.mark.unit
class TestCensus:
    """Tests for tree encodings and census tests."""

    def test_canonical_rooted(self) -> None:
        tree = RootedTree(n=3, parent=[None, 0, 1], root=0)
        assert exact_oracle.canonical_rooted(tree) == (0, 1, 2)

    def test_canonical_unrooted_ignores_orientation(self) -> None:
        assert exact_oracle.canonical_unrooted(3, [(0, 1), (1, 2)]) == exact_oracle.canonical_unrooted(3, [(2, 1), (1, 0)])

    def test_uniformity_of_a_flat_census(self) -> None:
        census = Counter({i: 100 for i in range(16)})
        statistic, pvalue = exact_oracle.census_uniformity(census, 16)
        assert statistic == 0.0
        assert pvalue == pytest.approx(1.0)

    def test_missing_outcomes_count_as_zero(self) -> None:
        _, pvalue = exact_oracle.census_uniformity(Counter({0: 500}), 16)
        assert pvalue < 1e-6

    def test_size_limit(self, rng) -> None:
        with pytest.raises(UnsupportedSizeError):
            exact_oracle.tree_census(KernelKind.ADDITIVE, 6, 10, rng)

    @pytest.mark.statistical
    def test_multiplicative_unrooted_census_reaches_all_trees(self, rng) -> None:
        census = exact_oracle.tree_census(KernelKind.MULTIPLICATIVE, 4, 2000, rng)
        assert len(census) == 16


@pytest.mark.unit
class TestVerificationMatrix:
    def test_all_cells_pass(self) -> None:
        cells = exact_oracle.verification_matrix(5)
        assert len(cells) == 3 * 15
        assert all(cell.passed for cell in cells)
        assert all(cell.brute_force is not None for cell in cells)

    def test_brute_force_skipped_above_limit(self) -> None:
        cells = exact_oracle.verification_matrix(4, brute_force_max=2)
        assert all((cell.brute_force is None) == (cell.n > 2) for cell in cells)
        assert all(cell.passed for cell in cells)
