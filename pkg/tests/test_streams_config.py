"""Tests for random streams, replicate fan-out, settings and logging setup."""
import logging

import numpy as np
import pytest
from scipy import stats

from app.core import config
from app.core.config import Settings, settings
from app.core.exceptions import InvalidParameterError
from app.core.log_config import configure_logging
from app.core.streams import GENERATOR_ID, derive_stream
from app.services.replicates import map_replicates, summarize


def _first_draw(rng, scale):
    return float(rng.random()) * scale


@pytest.mark.unit
class TestStreams:
    """Tests for per-replicate generators."""

    def test_same_pair_same_stream(self) -> None:
        assert derive_stream(42, 3).random(5).tolist() == derive_stream(42, 3).random(5).tolist()

    def test_indices_give_different_streams(self) -> None:
        assert derive_stream(42, 0).random() != derive_stream(42, 1).random()

    def test_seeds_give_different_streams(self) -> None:
        assert derive_stream(1, 0).random() != derive_stream(2, 0).random()

    def test_full_64_bit_range(self) -> None:
        derive_stream(2 ** 64 - 1, 0)
        with pytest.raises(InvalidParameterError):
            derive_stream(2 ** 64, 0)
        with pytest.raises(InvalidParameterError):
            derive_stream(-1, 0)

    def test_negative_index_rejected(self) -> None:
        with pytest.raises(InvalidParameterError):
            derive_stream(1, -1)

    def test_generator_id_names_the_scheme(self) -> None:
        assert GENERATOR_ID == settings.GENERATOR_ID
        assert "SeedSequence" in GENERATOR_ID

    @pytest.mark.statistical
    def test_first_draws_across_streams_are_uniform(self) -> None:
        draws = np.array([derive_stream(20240229, i).random() for i in range(10_000)])
        observed, _ = np.histogram(draws, bins=20, range=(0.0, 1.0))
        assert stats.chisquare(observed).pvalue > 1e-3


@pytest.mark.unit
class TestReplicates:
    """Tests for replicate fan-out."""

    def test_results_in_replicate_order(self) -> None:
        values = map_replicates(_first_draw, 7, 5, args=(2.0,), workers=1)
        assert values == [float(derive_stream(7, i).random()) * 2.0 for i in range(5)]

    def test_offset_shifts_the_streams(self) -> None:
        shifted = map_replicates(_first_draw, 7, 2, args=(1.0,), workers=1, offset=3)
        assert shifted == [float(derive_stream(7, i).random()) for i in (3, 4)]

    def test_process_pool_matches_serial(self) -> None:
        serial = map_replicates(_first_draw, 11, 6, args=(1.0,), workers=1)
        assert map_replicates(_first_draw, 11, 6, args=(1.0,), workers=3) == serial

    def test_zero_reps_rejected(self) -> None:
        with pytest.raises(InvalidParameterError):
            map_replicates(_first_draw, 1, 0, args=(1.0,))

    def test_summarize(self) -> None:
        summary = summarize([1.0, 2.0, 3.0, 4.0])
        assert summary["mean"] == 2.5
        assert summary["std"] == pytest.approx(np.std([1, 2, 3, 4], ddof=1))
        assert summary["stderr"] == pytest.approx(summary["std"] / 2.0)
        assert summary["reps"] == 4

    def test_summarize_single_value(self) -> None:
        assert summarize([3.0])["stderr"] == 0.0


@pytest.mark.unit
class TestSettings:
    """Tests for environment-driven settings."""

    def test_defaults(self) -> None:
        assert settings.MATERIALIZE_MAX_PAIRS > 0
        assert settings.RECORD_EVERY >= 1
        assert settings.QUAD_CUTOFF > 0

    @pytest.mark.parametrize("raw,expected", [("1", True), ("TRUE", True), (" on ", True), ("0", False), ("no", False)])
    def test_boolean_flags(self, raw, expected, monkeypatch) -> None:
        monkeypatch.setenv("COALESCENT_DEBUG_CHECKS", raw)
        assert config._flag("COALESCENT_DEBUG_CHECKS") is expected

    def test_missing_flag_uses_default(self, monkeypatch) -> None:
        monkeypatch.delenv("COALESCENT_DEBUG_CHECKS", raising=False)
        assert config._flag("COALESCENT_DEBUG_CHECKS") is False

    def test_settings_is_an_instance(self) -> None:
        assert isinstance(settings, Settings)


@pytest.mark.unit
class TestLogging:
    def test_level_override(self) -> None:
        configure_logging("debug")
        assert logging.getLogger().level == logging.DEBUG
        configure_logging("WARNING")
        assert logging.getLogger().level == logging.WARNING

    def test_unknown_level_falls_back_to_warning(self) -> None:
        configure_logging("chatty")
        assert logging.getLogger().level == logging.WARNING
