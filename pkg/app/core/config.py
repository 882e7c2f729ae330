from dotenv import load_dotenv
import os

load_dotenv()


def _flag(name: str, default: str = "false") -> bool:
    return os.getenv(name, default).strip().lower() in ("1", "true", "yes", "on")


class Settings:
    APP_NAME = os.getenv("APP_NAME", "coalescent-lab")
    APP_ENV = os.getenv("APP_ENV", "local")

    # Reproducibility
    DEFAULT_SEED = int(os.getenv("COALESCENT_SEED", "20240229"))
    GENERATOR_ID = "numpy.PCG64+SeedSequence(entropy=seed, spawn_key=(index,))"

    # Replicate fan-out
    WORKERS = int(os.getenv("COALESCENT_WORKERS", "1"))

    # Logging
    LOG_LEVEL = os.getenv("COALESCENT_LOG_LEVEL", "WARNING").upper()

    # Simulation
    DEBUG_CHECKS = _flag("COALESCENT_DEBUG_CHECKS")
    MATERIALIZE_MAX_PAIRS = int(os.getenv("COALESCENT_MATERIALIZE_MAX_PAIRS", "2000000"))
    RECORD_EVERY = int(os.getenv("COALESCENT_RECORD_EVERY", "1"))

    # Numerics
    ALPHA_TOL = float(os.getenv("COALESCENT_ALPHA_TOL", "1e-12"))
    QUAD_TOL = float(os.getenv("COALESCENT_QUAD_TOL", "1e-10"))
    QUAD_CUTOFF = float(os.getenv("COALESCENT_QUAD_CUTOFF", "60"))

settings = Settings()
