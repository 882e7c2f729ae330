"""Tests for sampling log Z_MC(n) and the entropy estimators."""
import math

import numpy as np
import pytest

from app.core.exceptions import InvalidParameterError, TruncatedRunError
from app.services import er_process, mc_entropy, numerics
from app.services.exact_oracle import exact_oracle


@pytest.mark.unit
class TestSampleLogZmc:
    """Tests for one realization of the empirical partition function."""

    def test_two_vertices(self, rng) -> None:
        sample = mc_entropy.sample_log_zmc(2, rng)
        assert sample.log_z == pytest.approx(0.0, abs=1e-15)
        assert sample.log_z_arrow == pytest.approx(math.log(2))

    def test_three_vertices_is_deterministic(self, make_rng) -> None:
        """Every chain on three vertices has terms 6 and 4."""
        for i in range(10):
            assert mc_entropy.sample_log_zmc(3, make_rng(i)).log_z == pytest.approx(math.log(6))

    def test_normalizations(self, rng) -> None:
        n = 50
        sample = mc_entropy.sample_log_zmc(n, rng)
        assert sample.normalized == pytest.approx((sample.log_z - 2 * n * math.log(n)) / n)
        assert sample.normalized_identity - sample.normalized == pytest.approx(
            (n - 1) * numerics.LN2 / n + 2 * math.log(n) / n
        )

    @pytest.mark.parametrize("p", [2, 3])
    def test_bounded_by_the_maximal_chain(self, p, rng) -> None:
        n = 1 << p
        ceiling = math.log(exact_oracle.brute_force_ess_sup(n))
        for _ in range(200):
            assert mc_entropy.sample_log_zmc(n, rng).log_z <= ceiling + 1e-12

    def test_audit_sums_agree_exactly(self, rng) -> None:
        sample = mc_entropy.sample_log_zmc(500, rng)
        assert sample.chain_log_sum == sample.process_log_sum
        assert sample.chain_log_sum < 0

    def test_single_vertex_rejected(self, rng) -> None:
        with pytest.raises(InvalidParameterError):
            mc_entropy.sample_log_zmc(1, rng)

    @pytest.mark.statistical
    def test_mean_of_z_at_four(self, rng) -> None:
        """E Z_MC(4) = 4^2 3! = 96: 120 with probability 1/5 and 90 otherwise."""
        values = np.exp([mc_entropy.sample_log_zmc(4, rng).log_z for _ in range(2000)])
        assert set(np.round(values).astype(int).tolist()) <= {90, 120}
        stderr = values.std(ddof=1) / math.sqrt(values.shape[0])
        assert abs(values.mean() - 96.0) < 5 * stderr
        assert math.exp(mc_entropy.log_expected_partition(4)) == pytest.approx(96.0)


@pytest.mark.unit
class TestEstimators:
    """Tests for the replicate estimators."""

    def test_samples_carry_provenance(self) -> None:
        samples = mc_entropy.entropy_samples(10, 3, seed=9, workers=1)
        assert [s.replicate for s in samples] == [0, 1, 2]
        assert all(s.seed == 9 for s in samples)

    def test_estimate_fields(self) -> None:
        estimate = mc_entropy.estimate_zeta_mc(40, 5, seed=2, workers=1)
        assert estimate["n"] == 40
        assert estimate["target"] == pytest.approx(numerics.constants().zeta_mc)
        identity = estimate["both_normalizations"]["two_n_minus_one_log_n"]
        assert identity["target"] == pytest.approx(estimate["target"] + math.log(2))

    def test_workers_do_not_change_the_estimate(self) -> None:
        serial = mc_entropy.estimate_zeta_mc(60, 4, seed=5, workers=1)
        parallel = mc_entropy.estimate_zeta_mc(60, 4, seed=5, workers=2)
        assert serial["mean_normalized"] == parallel["mean_normalized"]

    def test_exp_decay_at_three(self) -> None:
        assert mc_entropy.exp_decay_check(3, 5, seed=1, workers=1) == 0.0

    def test_exp_decay_rejects_negative_margin(self) -> None:
        with pytest.raises(InvalidParameterError):
            mc_entropy.exp_decay_check(10, 2, seed=1, c=-1.0, workers=1)

    def test_drift_fields(self) -> None:
        drift = mc_entropy.drift_check(20, 80, 3, seed=4, workers=1)
        assert drift["n_small"] == 20 and drift["n_large"] == 80
        assert drift["stderr_small"] >= 0.0 and drift["stderr_large"] >= 0.0
        assert isinstance(drift["moved_toward"], bool)

    def test_drift_needs_increasing_sizes(self) -> None:
        with pytest.raises(InvalidParameterError):
            mc_entropy.drift_check(50, 50, 2, seed=1, workers=1)


@pytest.mark.slow
class TestEstimatorsAtScale:
    """Acceptance-size runs of the entropy estimators."""

    @pytest.fixture(scope="class")
    def drift(self):
        return mc_entropy.drift_check(10_000, 100_000, 20, seed=13)

    def test_estimate_near_the_constant(self, drift) -> None:
        assert drift["target"] == pytest.approx(-1.14237, abs=1e-5)
        assert abs(drift["estimate_large"] - drift["target"]) <= 0.05

    def test_estimate_moves_toward_the_constant(self, drift) -> None:
        """The finite-size bias is of the order of the noise, so allow three joint stderrs."""
        slack = 3 * math.hypot(drift["stderr_small"], drift["stderr_large"])
        gap_small = abs(drift["estimate_small"] - drift["target"])
        gap_large = abs(drift["estimate_large"] - drift["target"])
        assert gap_large <= gap_small + slack

    def test_every_sample_below_the_mean_partition(self) -> None:
        assert mc_entropy.exp_decay_check(10_000, 50, seed=17) == 1.0


@pytest.mark.unit
class TestTermAudit:
    """Tests for the per-step susceptibility terms of the graph process."""

    def test_columns_and_sums(self, rng) -> None:
        run = er_process.run_graph_process(100, rng=rng, stop_when_connected=True)
        table, sums = mc_entropy.xi_term_audit(run)
        assert list(table.columns) == ["m", "chi_num", "term", "weight", "increased", "indicator_term"]
        assert len(table) == run.steps
        assert int(table["increased"].sum()) == 99
        assert sums["chain_log_sum"] == sums["process_log_sum"]
        assert table["indicator_term"].sum() == pytest.approx(sums["chain_log_sum"], rel=1e-12)
        assert (table["weight"] >= 1.0).all()

    def test_truncated_run_rejected(self, rng) -> None:
        run = er_process.run_graph_process(30, m_max=5, rng=rng)
        with pytest.raises(TruncatedRunError):
            mc_entropy.xi_term_audit(run)
