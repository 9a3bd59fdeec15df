"""
Special functions of the threshold problem: beta_k, g_k, q, u, the
constant lambda(d, r) and the high-dimensional series root.

Scalar routines take and return Python floats; scipy.integrate.quad and
the variational DP call them pointwise.
"""

import logging
import math
from dataclasses import asdict, dataclass
from typing import Dict, Optional, Sequence, Tuple

from cachetools import LRUCache, cached
from scipy import integrate, optimize
from scipy.special import gammaln
from tenacity import Retrying, retry_if_exception_type, stop_after_attempt

from bootlab.core.config import settings
from bootlab.core.errors import ConvergenceError, convergence_error, domain_error
from bootlab.services.metrics import quadrature_seconds

logger = logging.getLogger("Bootlab.Special")


@dataclass(frozen=True)
class QuadResult:
    value: float
    abs_error_estimate: float
    # Upper limit substituted for infinity
    truncation_point: float

    def to_dict(self) -> dict:
        return asdict(self)


def _check_k(k: int) -> None:
    if int(k) != k or k < 1:
        raise domain_error(f"k must be a positive integer, got {k}")


def _check_unit(u: float) -> None:
    if not 0.0 <= u <= 1.0:
        raise domain_error(f"u must lie in [0, 1], got {u}")


def _beta_parts(u: float, v: float, log_w: float) -> Tuple[float, float]:
    """(beta, 1 - beta) given v = 1 - u and log w = k log v."""
    w = math.exp(log_w)
    s = -math.expm1(log_w)
    root = math.sqrt(s * s + 4.0 * u * w)
    value = 0.5 * (s + root)
    complement = 2.0 * w * v / (1.0 + w + root)
    return value, complement


def beta(k: int, u: float) -> float:
    """Larger root of x^2 = (1 - (1-u)^k) x + u (1-u)^k."""
    _check_k(k)
    _check_unit(u)
    if u == 0.0:
        return 0.0
    if u == 1.0:
        return 1.0
    return _beta_parts(u, 1.0 - u, k * math.log1p(-u))[0]


def beta_complement(k: int, u: float) -> float:
    """1 - beta_k(u) without cancellation near u = 1."""
    _check_k(k)
    _check_unit(u)
    if u == 0.0:
        return 1.0
    if u == 1.0:
        return 0.0
    return _beta_parts(u, 1.0 - u, k * math.log1p(-u))[1]


def g(k: int, z: float) -> float:
    """g_k(z) = -log beta_k(1 - e^{-z}), z > 0."""
    _check_k(k)
    if not z > 0.0:
        raise domain_error(f"g_k(z) needs z > 0, got {z}")
    value, complement = _beta_parts(-math.expm1(-z), math.exp(-z), -k * z)
    if value < 0.5:
        return -math.log(value)
    return -math.log1p(-complement)


def q_of_p(p: float) -> float:
    """q = -log(1 - p)."""
    if not 0.0 <= p < 1.0:
        raise domain_error(f"p must lie in [0, 1), got {p}")
    return -math.log1p(-p)


def u(x: float, q: float) -> float:
    """u(x) = 1 - e^{-qx}."""
    return -math.expm1(-q * x)


def u_scaled(dims: Sequence[float], p: float, j: int) -> float:
    """Face-emptiness parameter u_j(R) = 1 - exp(-q prod_{i != j} x_i)."""
    if not 1 <= j <= len(dims):
        raise domain_error(f"Axis {j} not in [1, {len(dims)}]")
    face = math.prod(x for i, x in enumerate(dims, start=1) if i != j)
    return u(face, q_of_p(p))


# --- lambda(d, r) ---


def truncation_point(d: int, r: int, tol: float) -> float:
    """Z* with the tail of g_{r-1}(z^{d-r+1}) beyond Z* below tol / 10."""
    k, e = r - 1, d - r + 1
    z = (math.log(20.0 / (k * tol)) / k) ** (1.0 / e)
    return max(3.0, z)


def _quad_lambda(d: int, r: int, tol: float, limit: int) -> QuadResult:
    k, e = r - 1, d - r + 1

    def near(v: float) -> float:
        # z = v^2 takes the log singularity at 0
        if v == 0.0:
            return 0.0
        return 2.0 * v * g(k, (v * v) ** e)

    def far(z: float) -> float:
        return g(k, z**e)

    top = truncation_point(d, r, tol)
    head = integrate.quad(near, 0.0, 1.0, epsabs=tol / 4, epsrel=1e-13, limit=limit, full_output=1)
    tail = integrate.quad(far, 1.0, top, epsabs=tol / 4, epsrel=1e-13, limit=limit, full_output=1)
    result = QuadResult(
        value=head[0] + tail[0],
        abs_error_estimate=head[1] + tail[1] + tol / 10,
        truncation_point=top,
    )
    if result.abs_error_estimate > tol:
        raise convergence_error(
            f"lambda({d},{r}) error {result.abs_error_estimate:.3g} > tol {tol:.3g} at limit {limit}",
            partial=result,
        )
    return result


@cached(LRUCache(maxsize=128))
def _lambda_cached(d: int, r: int, tol: float) -> QuadResult:
    with quadrature_seconds.time():
        for attempt in Retrying(
            stop=stop_after_attempt(settings.QUAD_RETRIES),
            retry=retry_if_exception_type(ConvergenceError),
            reraise=True,
        ):
            with attempt:
                limit = settings.QUAD_LIMIT * 2 ** (attempt.retry_state.attempt_number - 1)
                result = _quad_lambda(d, r, tol, limit)
    logger.debug(f"lambda({d},{r}) = {result.value:.10f} +- {result.abs_error_estimate:.2g}")
    return result


def lambda_(d: int, r: int, tol: Optional[float] = None) -> QuadResult:
    """lambda(d, r) = integral over (0, inf) of g_{r-1}(z^{d-r+1})."""
    tol = settings.DEFAULT_TOL if tol is None else tol
    if not 2 <= r <= d:
        raise domain_error(f"lambda(d, r) needs 2 <= r <= d, got d={d}, r={r}")
    if not tol > 0:
        raise domain_error(f"tol must be positive, got {tol}")
    return _lambda_cached(int(d), int(r), float(tol))


def lambda_table(dmax: int, tol: Optional[float] = None) -> Dict[Tuple[int, int], QuadResult]:
    """All lambda(d, r) with 2 <= r <= d <= dmax, keyed (d, r)."""
    tol = settings.TABLE_TOL if tol is None else tol
    if dmax < 2:
        raise domain_error(f"dmax must be at least 2, got {dmax}")
    logger.info(f"[TABLE] Computing lambda triangle up to d = {dmax} at tol {tol:g}")
    return {(d, r): lambda_(d, r, tol) for r in range(2, dmax + 1) for d in range(r, dmax + 1)}


# --- High-dimensional limit ---


def highdim_series(lam: float, tol: float = 1e-12) -> float:
    """sum_k (-1)^k lam^k / (2^{k^2-k} k!), truncated once terms drop below tol / 10."""
    if lam < 0:
        raise domain_error(f"lambda must be nonnegative, got {lam}")
    if lam == 0:
        return 1.0
    total = 0.0
    log_lam = math.log(lam)
    k = 0
    while True:
        log_term = k * log_lam - (k * k - k) * math.log(2.0) - gammaln(k + 1)
        term = math.exp(log_term)
        total += term if k % 2 == 0 else -term
        # later terms only shrink once lam < 4^k (k + 1)
        if term < tol / 10 and lam < 4.0**k * (k + 1):
            return total
        k += 1


def lambda_highdim(tol: Optional[float] = None) -> float:
    """Smallest positive root of highdim_series."""
    tol = settings.DEFAULT_TOL if tol is None else tol
    step, lo = 0.05, 0.0
    series_tol = min(tol, 1e-12)
    while lo < 10.0:
        hi = lo + step
        if highdim_series(hi, series_tol) <= 0.0:
            return optimize.bisect(lambda x: highdim_series(x, series_tol), max(lo, 1e-12), hi, xtol=tol / 2)
        lo = hi
    raise convergence_error("No sign change of the series below 10")
