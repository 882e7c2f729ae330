"""
Random streams
One master seed, one independent stream per replicate.
"""
import numpy as np

from app.core.config import settings
from app.core.exceptions import InvalidParameterError

GENERATOR_ID = settings.GENERATOR_ID
SEED_LIMIT = 2 ** 64


def derive_stream(master_seed: int, replicate_index: int) -> np.random.Generator:
    """
    Deterministic, independent generator for replicate `replicate_index`

    The (seed, index) pair is mixed by numpy's SeedSequence hashing, with the
    index used as the spawn key, so streams for different indices do not overlap.

    Args:
        master_seed: 64-bit experiment seed
        replicate_index: Non-negative replicate number

    Returns:
        np.random.Generator backed by PCG64
    """
    if not 0 <= master_seed < SEED_LIMIT:
        raise InvalidParameterError(f"seed must lie in [0, 2**64), got {master_seed}")
    if replicate_index < 0:
        raise InvalidParameterError(f"replicate index must be non-negative, got {replicate_index}")
    sequence = np.random.SeedSequence(entropy=master_seed, spawn_key=(replicate_index,))
    return np.random.Generator(np.random.PCG64(sequence))
