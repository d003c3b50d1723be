"""Special functions used by the exact solutions and source terms.

Only what the benchmark problems need: the Gamma function, the
complementary error function and the one-parameter Mittag-Leffler
function ``E_g(z)`` on the non-positive real axis.

``E_g(-x)`` is evaluated by one of three branches, chosen from a cheap
a-priori accuracy estimate:

* the power series ``sum z**k / Gamma(1 + g k)`` in double precision,
  when its largest term is small enough that cancellation stays below the
  target accuracy;
* the asymptotic expansion ``-sum_{k>=1} z**-k / Gamma(1 - g k)``, when its
  optimally truncated remainder is below the target;
* the power series in extended precision (mpmath) otherwise.
"""

import logging
import math
import warnings
from dataclasses import dataclass
from typing import NamedTuple

import mpmath

from fracl1.errors import DomainError

logger = logging.getLogger(__name__)

_EPS = 2.220446049250313e-16
_LOG_STOP = math.log(1e-3 * _EPS)


def gamma_fn(x: float) -> float:
    """Gamma function for real ``x``; raises ``DomainError`` at the poles."""
    x = float(x)
    if x <= 0.0 and x == math.floor(x):
        raise DomainError(f"Gamma has a pole at x = {x}")
    try:
        return math.gamma(x)
    except OverflowError:
        return math.inf


def erfc(x: float) -> float:
    """Complementary error function."""
    return math.erfc(x)


def _rgamma(y: float) -> float:
    # 1/Gamma(y), zero at the poles.
    r = round(y)
    if r <= 0 and abs(y - r) < 1e-12:
        return 0.0
    return 1.0 / math.gamma(y)


@dataclass(frozen=True)
class MLConfig:
    """Tuning knobs for :func:`mittag_leffler`.

    Parameters
    ----------
    series_cutoff : float
        Largest ``|z|`` for which the double-precision series is tried.
    series_terms : int
        Term cap for the double-precision series.
    asymptotic_terms : int
        Term cap for the asymptotic expansion.
    target : float
        Absolute accuracy requested.
    extended_precision : bool
        Allow the mpmath series when neither double-precision branch can
        meet ``target``.  When disabled the better of the two is returned
        and the result is flagged as inaccurate.
    """

    series_cutoff: float = 5.0
    series_terms: int = 200
    asymptotic_terms: int = 400
    target: float = 1e-10
    extended_precision: bool = True

    def __post_init__(self):
        if self.series_cutoff <= 0 or self.series_terms <= 0:
            raise DomainError("series thresholds must be positive")
        if self.asymptotic_terms <= 0 or self.target <= 0:
            raise DomainError("asymptotic term count and target must be positive")


DEFAULT_ML_CONFIG = MLConfig()


class MLValue(NamedTuple):
    value: float
    branch: str  # "exp", "series", "asymptotic" or "extended"
    error_estimate: float
    accurate: bool


def _series_peak(gamma: float, x: float, n_terms: int) -> tuple[int, float]:
    """Index and natural log of the largest ``x**k / Gamma(1 + g k)`` for k < n_terms."""
    if x <= 0.0:
        return 0, 0.0
    lx = math.log(x)
    # the term magnitude is log-concave in k, so walk up to the peak
    best, at = 0.0, 0
    for k in range(1, n_terms):
        v = k * lx - math.lgamma(1.0 + gamma * k)
        if v < best:
            break
        best, at = v, k
    return at, best


def _series_max_log_term(gamma: float, x: float, n_terms: int) -> float:
    return _series_peak(gamma, x, n_terms)[1]


def ml_series(gamma: float, z: float, n_terms: int = 200) -> tuple[float, float]:
    """Double-precision power series of ``E_g(z)``.

    Returns the sum and a rough absolute error estimate: rounding from
    cancellation among the terms plus the last term added.
    """
    x = -float(z)
    if x == 0.0:
        return 1.0, 0.0
    lx = math.log(x)
    terms = [1.0]
    prev = 0.0
    for k in range(1, n_terms):
        mag = k * lx - math.lgamma(1.0 + gamma * k)
        terms.append(math.exp(mag) if k % 2 == 0 else -math.exp(mag))
        if mag < prev and mag < _LOG_STOP:
            break
        prev = mag
    peak = max(abs(t) for t in terms)
    return math.fsum(terms), 4.0 * _EPS * peak * math.sqrt(len(terms)) + abs(terms[-1])


EXTENDED_TERM_LIMIT = 20000


def ml_series_extended(gamma: float, z: float, target: float = 1e-10) -> float:
    """Power series of ``E_g(z)`` summed in extended precision.

    Raises :class:`DomainError` when the terms peak beyond
    ``EXTENDED_TERM_LIMIT`` (small ``g`` with moderate ``|z|``).
    """
    x = -float(z)
    if x == 0.0:
        return 1.0
    k_peak, peak = _series_peak(gamma, x, EXTENDED_TERM_LIMIT)
    if k_peak >= EXTENDED_TERM_LIMIT - 1:
        raise DomainError(f"series for E_{gamma}({z}) peaks beyond {EXTENDED_TERM_LIMIT} terms")
    digits = max(20, int(peak / math.log(10.0)) + int(-math.log10(target)) + 10)
    with mpmath.workdps(digits):
        mz = mpmath.mpf(z)
        g = mpmath.mpf(gamma)
        stop = mpmath.mpf(10) ** (-(int(-math.log10(target)) + 6))
        total = mpmath.mpf(0)
        k = 0
        while True:
            term = mz**k * mpmath.rgamma(1 + g * k)
            total += term
            if k > k_peak and abs(term) < stop:
                break
            k += 1
        return float(total)


def ml_asymptotic(gamma: float, z: float, n_terms: int = 400, target: float = 0.0) -> tuple[float, float]:
    """Asymptotic expansion of ``E_g(z)`` for large negative ``z``.

    Terms whose Gamma factor sits on a pole vanish and are skipped.  Since
    ``1/Gamma(1 - s) = Gamma(s) sin(pi s) / pi``, term ``k`` is bounded by the
    smooth envelope ``Gamma(g k) / (pi x**k)``; the sum stops once the
    envelope drops below ``target/100`` or starts to grow (optimal
    truncation).  Returns the sum and an error estimate: the envelope of
    the first omitted term plus, for ``2/3 < g < 1``, the size of the
    neglected exponentially small pair ``(2/g) exp(x**(1/g) cos(pi/g))``.
    """
    x = -float(z)
    lx = math.log(x)
    terms = []
    env_prev = math.inf
    env = math.inf
    for k in range(1, n_terms + 1):
        env = math.exp(math.lgamma(gamma * k) - k * lx) / math.pi
        if env > env_prev:
            break
        r = _rgamma(1.0 - gamma * k)
        if r != 0.0:
            terms.append(-((-1.0) ** k) * r * x ** (-k))  # -z**-k / Gamma(1 - g k)
        env_prev = env
        if env < 0.01 * target:
            env = math.exp(math.lgamma(gamma * (k + 1)) - (k + 1) * lx) / math.pi
            break
    err = min(env, env_prev)
    c = math.cos(math.pi / gamma)
    if c < 0.0:
        err += 2.0 / gamma * math.exp(c * x ** (1.0 / gamma))
    return math.fsum(terms), err


def evaluate_mittag_leffler(gamma: float, z: float, config: MLConfig = DEFAULT_ML_CONFIG) -> MLValue:
    """Evaluate ``E_g(z)`` for ``0 < g <= 1`` and real ``z <= 0`` with diagnostics."""
    gamma = float(gamma)
    z = float(z)
    if not (0.0 < gamma <= 1.0):
        raise DomainError(f"Mittag-Leffler order must lie in (0, 1], got {gamma}")
    if z > 0.0 or math.isnan(z):
        raise DomainError(f"only real z <= 0 is supported, got {z}")
    if z == 0.0:
        return MLValue(1.0, "series", 0.0, True)
    if abs(gamma - 1.0) < 1e-8:
        return MLValue(math.exp(z), "exp", 0.0, True)

    x = -z
    if math.isinf(x):
        return MLValue(0.0, "asymptotic", 0.0, True)

    target = config.target
    if x <= config.series_cutoff:
        peak = _series_max_log_term(gamma, x, config.series_terms)
        if _EPS * math.exp(peak) * 4.0 <= target:
            value, err = ml_series(gamma, z, config.series_terms)
            if err <= target:
                return MLValue(value, "series", err, True)

    a_value, a_err = ml_asymptotic(gamma, z, config.asymptotic_terms, target)
    if a_err <= target:
        return MLValue(a_value, "asymptotic", a_err, True)

    if config.extended_precision:
        try:
            return MLValue(ml_series_extended(gamma, z, target), "extended", target, True)
        except DomainError:
            pass

    s_value, s_err = ml_series(gamma, z, config.series_terms)
    if s_err < a_err:
        return MLValue(s_value, "series", s_err, False)
    return MLValue(a_value, "asymptotic", a_err, False)


def mittag_leffler(gamma: float, z: float, config: MLConfig = DEFAULT_ML_CONFIG) -> float:
    """One-parameter Mittag-Leffler function ``E_g(z) = sum z**k / Gamma(1 + g k)``.

    Supports ``0 < g <= 1`` and real ``z <= 0``.  Warns when the requested
    accuracy could not be reached (only possible with
    ``config.extended_precision`` disabled).

    >>> round(mittag_leffler(0.5, -1.0), 6)
    0.427584
    """
    res = evaluate_mittag_leffler(gamma, z, config)
    if not res.accurate:
        warnings.warn(
            f"E_{gamma}({z}) accurate only to ~{res.error_estimate:.1e}", RuntimeWarning, stacklevel=2
        )
    return res.value
