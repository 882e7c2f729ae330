"""
Shared fixtures: seeded generators and small hand-built forests
"""
import pytest

from app.core.streams import derive_stream
from app.services import forest as forest_ops

TEST_SEED = 20240229


@pytest.fixture
def rng():
    """Replicate 0 of the test seed"""
    return derive_stream(TEST_SEED, 0)


@pytest.fixture
def make_rng():
    """Factory for independent seeded generators"""

    def _make(index: int = 0, seed: int = TEST_SEED):
        return derive_stream(seed, index)

    return _make


@pytest.fixture
def paired_forest():
    """n=4 after merging {1,2} and {3,4}"""
    forest = forest_ops.new_forest(4)
    forest_ops.merge(forest, 0, 1)
    forest_ops.merge(forest, 2, 3)
    return forest


@pytest.fixture
def debug_checks(monkeypatch):
    """Recompute forest bookkeeping after every merge"""
    from app.core.config import settings

    monkeypatch.setattr(settings, "DEBUG_CHECKS", True)
    return settings
