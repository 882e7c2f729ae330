"""
Domain exceptions
Every error carries a machine-readable code, a human-readable detail and the
process exit code the CLI should use when it surfaces.
"""
from typing import Optional

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_ACCEPTANCE = 2


class CoalescentError(Exception):
    """Base class for all errors raised by the simulation and oracle services"""

    code = "coalescent_error"
    exit_code = EXIT_ACCEPTANCE

    def __init__(self, detail: str, code: Optional[str] = None):
        super().__init__(detail)
        self.detail = detail
        if code is not None:
            self.code = code

    def __repr__(self):
        return f"<{type(self).__name__}(code={self.code!r}, detail={self.detail!r})>"


class InvalidParameterError(CoalescentError, ValueError):
    code = "invalid_parameter"
    exit_code = EXIT_USAGE


class SameComponentMergeError(CoalescentError):
    code = "same_component_merge"


class DuplicateWeightError(CoalescentError, ValueError):
    code = "duplicate_weight"
    exit_code = EXIT_USAGE


class ZeroRateError(CoalescentError):
    code = "zero_admissible_rate"


class TruncatedRunError(CoalescentError):
    code = "truncated_run"


class UnsupportedSizeError(CoalescentError, ValueError):
    code = "unsupported_size"
    exit_code = EXIT_USAGE


class NonIntegralCountError(CoalescentError):
    code = "non_integral_count"


class QuadratureError(CoalescentError):
    code = "quadrature_not_converged"


class UsageError(CoalescentError):
    code = "usage"
    exit_code = EXIT_USAGE


class AcceptanceFailure(CoalescentError):
    code = "acceptance_failed"
    exit_code = EXIT_ACCEPTANCE
