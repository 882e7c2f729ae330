"""
Numerics
The giant-component fraction alpha(c), t(n, p), the two lambda-integrals and
the closed-form constants they are compared against.
"""
import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, Optional, Tuple

from scipy import optimize, special

from app.core.config import settings
from app.core.exceptions import InvalidParameterError, QuadratureError, UnsupportedSizeError
from app.models.kernel import KernelKind

logger = logging.getLogger(__name__)

LN2 = math.log(2.0)
_BELOW_ONE = math.nextafter(1.0, 0.0)
# Above this mean degree 1 - alpha is tiny and is better found directly.
_COMPLEMENT_FROM = 5.0
# Integrands need alpha well below the quadrature tolerance.
_FINE_TOL = 1e-15


# ---------------------------------------------------------------------------
# alpha(c) and t(n, p)
# ---------------------------------------------------------------------------

def _alpha_equation(x: float, c: float) -> float:
    # e^{-cx} - (1 - x) without cancellation near x = 0
    return math.expm1(-c * x) + x


def alpha(c: float, tol: Optional[float] = None) -> float:
    """
    Largest root of e^{-cx} = 1 - x

    Zero for c <= 1; otherwise found by bisection on a bracket whose left end
    is below the root and whose right end is 1.

    Args:
        c: Mean degree, non-negative
        tol: Absolute tolerance on the root, COALESCENT_ALPHA_TOL by default

    Returns:
        float in [0, 1)
    """
    if c < 0 or math.isnan(c):
        raise InvalidParameterError(f"alpha needs c >= 0, got {c}")
    if c <= 1.0:
        return 0.0
    tol = settings.ALPHA_TOL if tol is None else tol

    lo = (c - 1.0) / (c * c)
    if c >= 2.0:
        lo = max(lo, 1.0 - 2.0 * math.exp(-c))
    for _ in range(100):
        if _alpha_equation(lo, c) < 0.0:
            break
        lo /= 2.0
    else:
        raise InvalidParameterError(f"could not bracket alpha({c})")
    root = optimize.bisect(_alpha_equation, lo, 1.0, args=(c,), xtol=tol, maxiter=400)
    return min(root, _BELOW_ONE)


def alpha_complement(c: float) -> float:
    """
    1 - alpha(c), accurate in relative terms for large c

    For c >= 5 this iterates b = exp(-c (1 - b)), a contraction there.
    """
    if c < _COMPLEMENT_FROM:
        return 1.0 - alpha(c, tol=_FINE_TOL)
    b = math.exp(-c)
    for _ in range(200):
        nxt = math.exp(-c * (1.0 - b))
        if abs(nxt - b) <= 4e-16 * nxt:
            return nxt
        b = nxt
    return b


def alpha_bounds(c: float) -> Tuple[float, float]:
    """(1 - 2e^{-c}, 1 - e^{-c}), valid for c >= 2"""
    return 1.0 - 2.0 * math.exp(-c), 1.0 - math.exp(-c)


def t_star(n: int, p: float) -> float:
    """n * alpha(n ln(1/(1-p))), the largest root t of n (1-p)^t = n - t"""
    if not 0.0 <= p < 1.0:
        raise InvalidParameterError(f"t_star needs 0 <= p < 1, got {p}")
    return n * alpha(-n * math.log1p(-p))


def susceptibility_prediction(n: int, p: float) -> float:
    if n < 0 or p < 0:
        raise InvalidParameterError("susceptibility prediction needs non-negative arguments")
    return alpha(n * p) ** 2 * n


def susc_exp_target(n: int, m: int) -> float:
    if n <= 0 or m < 0:
        raise InvalidParameterError("target needs n > 0 and m >= 0")
    return alpha(2.0 * m / n) ** 2 * n


# ---------------------------------------------------------------------------
# Quadrature
# ---------------------------------------------------------------------------

def adaptive_simpson(
    f: Callable[[float], float],
    a: float,
    b: float,
    tol: float = 1e-10,
    max_depth: int = 50,
) -> Tuple[float, float]:
    """
    Adaptive Simpson's rule with Richardson correction

    Args:
        f: Integrand
        a: Lower bound
        b: Upper bound
        tol: Absolute error tolerance
        max_depth: Maximum recursion depth

    Returns:
        Tuple of (integral, error estimate)

    Raises:
        QuadratureError: the depth limit was hit before the tolerance was met
    """
    if a == b:
        return 0.0, 0.0
    if a > b:
        value, err = adaptive_simpson(f, b, a, tol, max_depth)
        return -value, err

    def _simpson(fa: float, fm: float, fb: float, h: float) -> float:
        return h / 3.0 * (fa + 4.0 * fm + fb)

    def _adaptive(lo, hi, flo, fmid, fhi, whole, depth, tol):
        mid = (lo + hi) / 2.0
        h = (hi - lo) / 4.0
        fl = f((lo + mid) / 2.0)
        fr = f((mid + hi) / 2.0)
        left = _simpson(flo, fl, fmid, h)
        right = _simpson(fmid, fr, fhi, h)
        estimate = (left + right - whole) / 15.0
        if abs(estimate) < tol:
            return left + right + estimate, abs(estimate)
        if depth >= max_depth:
            raise QuadratureError(f"no convergence on [{lo}, {hi}] after {max_depth} subdivisions")
        lv, le = _adaptive(lo, mid, flo, fl, fmid, left, depth + 1, tol / 2.0)
        rv, re = _adaptive(mid, hi, fmid, fr, fhi, right, depth + 1, tol / 2.0)
        return lv + rv, le + re

    fa, fb = f(a), f(b)
    fm = f((a + b) / 2.0)
    whole = _simpson(fa, fm, fb, (b - a) / 2.0)
    return _adaptive(a, b, fa, fm, fb, whole, 0, tol)


def _one_minus_alpha_sq(lam: float) -> float:
    if lam <= 1.0:
        return 1.0
    b = alpha_complement(lam)
    return b * (2.0 - b)


def zeta3_integrand(lam: float) -> float:
    """lambda (1 - alpha(lambda)^2)"""
    return lam * _one_minus_alpha_sq(lam)


def zmc_integrand(lam: float) -> float:
    """(1 - alpha^2) ln(1 - alpha^2), zero where alpha = 0"""
    x = _one_minus_alpha_sq(lam)
    return float(special.xlogy(x, x))


def tail_bound(cutoff: float) -> float:
    """Bound on the integrands' mass beyond the cutoff"""
    return 4.0 * (cutoff + 1.0) * math.exp(-cutoff)


def _split_integral(f: Callable[[float], float], tol: Optional[float], cutoff: Optional[float]) -> Tuple[float, float]:
    tol = settings.QUAD_TOL if tol is None else tol
    cutoff = settings.QUAD_CUTOFF if cutoff is None else cutoff
    # alpha leaves 0 at lambda = 1, the only kink
    low, low_err = adaptive_simpson(f, 0.0, 1.0, tol / 2.0)
    high, high_err = adaptive_simpson(f, 1.0, cutoff, tol / 2.0)
    return low + high, low_err + high_err


def zeta3_integral(tol: Optional[float] = None, cutoff: Optional[float] = None) -> float:
    """Integral over [0, cutoff] of lambda (1 - alpha^2); tends to 2 zeta(3)"""
    value, err = _split_integral(zeta3_integrand, tol, cutoff)
    logger.debug(f"zeta3 integral {value:.12f} (estimate {err:.2e})")
    return value


def zmc_integral(tol: Optional[float] = None, cutoff: Optional[float] = None) -> float:
    """Integral over [0, cutoff] of (1 - alpha^2) ln(1 - alpha^2); tends to 2 (zeta_mc + ln 2)"""
    value, err = _split_integral(zmc_integrand, tol, cutoff)
    logger.debug(f"zmc integral {value:.12f} (estimate {err:.2e})")
    return value


# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

def zeta_series(s: int, terms: int = 1000) -> float:
    """
    Riemann zeta at an integer s >= 2 by a partial sum plus Euler-Maclaurin tail
    """
    if s < 2:
        raise InvalidParameterError(f"zeta series needs s >= 2, got {s}")
    head = math.fsum(k ** -float(s) for k in range(terms, 0, -1))
    N = float(terms)
    tail = (
        N ** (1 - s) / (s - 1)
        - N ** -s / 2.0
        + s * N ** (-s - 1) / 12.0
        - s * (s + 1) * (s + 2) * N ** (-s - 3) / 720.0
    )
    return head + tail


@dataclass(frozen=True)
class Constants:
    zeta3: float
    zeta_mc: float
    two_zeta3: float
    zmc_integral_target: float

    def __repr__(self):
        return f"<Constants(zeta3={self.zeta3:.10f}, zeta_mc={self.zeta_mc:.10f})>"


def constants() -> Constants:
    zeta3 = zeta_series(3)
    zeta_mc = zeta_series(2) - 3.0 + LN2 - LN2 ** 2
    return Constants(
        zeta3=zeta3,
        zeta_mc=zeta_mc,
        two_zeta3=2.0 * zeta3,
        zmc_integral_target=2.0 * (zeta_mc + LN2),
    )


def integrals_report(tol: Optional[float] = None, cutoff: Optional[float] = None) -> Dict[str, float]:
    """Both integrals with their targets, absolute errors and the truncation tail bound"""
    const = constants()
    cutoff = settings.QUAD_CUTOFF if cutoff is None else cutoff
    z3 = zeta3_integral(tol, cutoff)
    zmc = zmc_integral(tol, cutoff)
    return {
        "zeta3_integral": z3,
        "zeta3_target": const.two_zeta3,
        "zeta3_abs_error": abs(z3 - const.two_zeta3),
        "zmc_integral": zmc,
        "zmc_target": const.zmc_integral_target,
        "zmc_abs_error": abs(zmc - const.zmc_integral_target),
        "zeta_mc": const.zeta_mc,
        "cutoff": cutoff,
        "tail_bound": tail_bound(cutoff),
    }


# ---------------------------------------------------------------------------
# Multiplicative vs additive partition functions at k = n/2
# ---------------------------------------------------------------------------

MAX_RATIO_N = 3000


def ratio_mc_ac(n: int) -> Tuple[float, float]:
    """
    Compare Z_MC(n, n/2) with Z_AC(n, n/2) using exact closed forms

    Returns:
        (ln Z_MC - ln Z_AC) / (n/2) and ln Z_MC / (n ln n)
    """
    from app.services.exact_oracle import exact_oracle

    if n < 2:
        raise InvalidParameterError(f"ratio needs n >= 2, got {n}")
    if n > MAX_RATIO_N:
        raise UnsupportedSizeError(f"exact evaluation is supported up to n={MAX_RATIO_N}, got {n}")
    k = n // 2
    log_mc = math.log(exact_oracle.closed_form_z(KernelKind.MULTIPLICATIVE, n, k))
    log_ac = math.log(exact_oracle.closed_form_z(KernelKind.ADDITIVE, n, k))
    return (log_mc - log_ac) / (n / 2.0), log_mc / (n * math.log(n))
