"""Log-gamma, log-beta, generalized binomial coefficients and the Gauss 2F1.

Everything is carried on the log scale.  ``gauss_2f1`` is restricted to
positive parameters and ``0 <= z < 1``, which is the only regime the prior
normalizers and closed-form posterior moments need.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import betaln, gammaln, logsumexp

from .errors import ConvergenceError, DomainError
from .quadrature import integrate_line, log_sigmoid

SERIES_MAX_TERMS = 1_000_000
QUAD_MAX_PANELS = 10_000
EULER_SWITCH = 0.9
_SERIES_CHUNK = 512


def log_gamma(x: float) -> float:
    """Natural log of the gamma function for ``x > 0``."""
    if not x > 0 or not math.isfinite(x):
        raise DomainError(f"log_gamma requires finite x > 0, got {x}")
    return float(gammaln(x))


def log_beta(a: float, b: float) -> float:
    """Natural log of the beta function ``B(a, b)``."""
    if not (a > 0 and b > 0) or not (math.isfinite(a) and math.isfinite(b)):
        raise DomainError(f"log_beta requires positive finite arguments, got ({a}, {b})")
    return float(betaln(a, b))


def log_binom(n: float, k: float) -> float:
    """Log of the generalized binomial coefficient ``Gamma(n+1) / (Gamma(k+1) Gamma(n-k+1))``.

    Requires ``n - k > -1`` and ``k > -1`` so that all three gamma
    arguments are positive.
    """
    if not (k > -1 and n - k > -1):
        raise DomainError(f"log_binom needs k > -1 and n - k > -1, got n={n}, k={k}")
    return float(gammaln(n + 1) - gammaln(k + 1) - gammaln(n - k + 1))


@dataclass(frozen=True)
class HypergeometricEval:
    """A 2F1 value together with how it was obtained.

    ``terms_used`` counts series terms for the power series path and
    integrand evaluations for the Euler integral path.
    """

    value: float
    log_value: float
    abs_error_estimate: float
    terms_used: int
    method: str


def _check_params(a, b, c, z, one_minus_z):
    for name, v in (("a", a), ("b", b), ("c", c)):
        if not (v > 0 and math.isfinite(v)):
            raise DomainError(f"gauss_2f1 requires {name} > 0, got {v}")
        if v > 1e4:
            raise DomainError(f"gauss_2f1 parameter {name}={v} exceeds 1e4")
    if one_minus_z is not None:
        if not (0 < one_minus_z <= 1):
            raise DomainError(f"one_minus_z must lie in (0, 1], got {one_minus_z}")
    elif not (0 <= z < 1):
        raise DomainError(f"gauss_2f1 requires 0 <= z < 1, got {z}")


def _series(a: float, b: float, c: float, z: float, max_terms: int) -> HypergeometricEval:
    if z == 0:
        return HypergeometricEval(1.0, 0.0, 0.0, 1, "series")
    log_z = math.log(z)
    k_stable = 2.0 * max(a, b, c) + 10.0
    log_t = 0.0
    log_sum = 0.0
    start = 0
    while start < max_terms:
        k = np.arange(start, start + _SERIES_CHUNK, dtype=float)
        log_r = np.log(a + k) + np.log(b + k) - np.log(c + k) - np.log1p(k) + log_z
        cum = log_t + np.cumsum(log_r)
        log_sum = float(np.logaddexp(log_sum, logsumexp(cum)))
        log_t = float(cum[-1])
        start += _SERIES_CHUNK
        k_last = start - 1
        if k_last < k_stable:
            continue
        r_next = math.exp(float(log_r[-1]))
        r_max = max(r_next, z)
        if r_max >= 1:
            continue
        # Ratios are monotone beyond k_stable, so the remainder is geometric.
        log_tail = log_t + float(log_r[-1]) - math.log1p(-r_max)
        if log_tail <= log_sum + math.log(1e-17):
            value = math.exp(log_sum)
            return HypergeometricEval(value, log_sum, math.exp(log_tail), start + 1, "series")
    raise ConvergenceError(
        f"2F1({a}, {b}; {c}; {z}) power series not converged after {max_terms} terms")


def _euler(a: float, b: float, c: float, log_1mz: float) -> HypergeometricEval:
    # Euler integral with t^(B-1) (1-t)^(C-B-1) (1-zt)^(-A), t = sigmoid(v).
    big, small = (a, b) if a >= b else (b, a)
    A, B, C = big, small, c
    cb = C - B

    def log_f(v):
        ls_p = log_sigmoid(v)
        ls_m = log_sigmoid(-v)
        return B * ls_p + cb * ls_m - A * np.logaddexp(ls_m, log_1mz + ls_p)

    slowest = min(B, cb)
    extent = max(1e4, 200.0 / slowest)
    # Start the scan near the integrand's peak in the absence of the (1-zt) factor.
    center = math.log(B / cb)
    res = integrate_line(log_f, center=center, rtol=1e-12, max_extent=extent,
                         max_panels=QUAD_MAX_PANELS)
    log_value = res.log_value - log_beta(B, cb)
    value = math.exp(log_value)
    return HypergeometricEval(value, log_value, value * max(res.rel_error, 1e-15),
                              res.evaluations, "euler")


def gauss_2f1(a: float, b: float, c: float, z: float | None = None, *,
              one_minus_z: float | None = None) -> HypergeometricEval:
    """Gauss hypergeometric function ``2F1(a, b; c; z)`` for positive parameters.

    Parameters
    ----------
    a, b, c : float
        Positive parameters, each at most 1e4.
    z : float
        Argument in ``[0, 1)``.
    one_minus_z : float, optional
        ``1 - z`` supplied directly.  Use this when ``z`` is of the form
        ``1 - tau**2`` with small ``tau`` so the distance to the branch point
        is not lost to cancellation.

    Returns
    -------
    HypergeometricEval
        Power series for ``z <= 0.9``; Euler integral on a logit scale above,
        which needs ``c > min(a, b)``.  When that fails the series is tried
        regardless.

    Raises
    ------
    ConvergenceError
        If neither path meets its error target within budget.
    """
    if z is None and one_minus_z is None:
        raise TypeError("gauss_2f1 needs z or one_minus_z")
    _check_params(a, b, c, z, one_minus_z)
    if one_minus_z is not None:
        z = 1.0 - one_minus_z
        log_1mz = math.log(one_minus_z)
    else:
        log_1mz = math.log1p(-z)
    lo, hi = (a, b) if a <= b else (b, a)
    if z <= EULER_SWITCH or c <= lo:
        return _series(lo, hi, c, z, SERIES_MAX_TERMS)
    return _euler(lo, hi, c, log_1mz)


def gauss_2f1_series(a: float, b: float, c: float, z: float,
                     max_terms: int = SERIES_MAX_TERMS) -> HypergeometricEval:
    """Direct power series evaluation, exposed for cross-checking the two paths."""
    _check_params(a, b, c, z, None)
    lo, hi = (a, b) if a <= b else (b, a)
    return _series(lo, hi, c, z, max_terms)


def gauss_2f1_euler(a: float, b: float, c: float, z: float | None = None, *,
                    one_minus_z: float | None = None) -> HypergeometricEval:
    """Euler integral evaluation; requires ``c > min(a, b)``."""
    if z is None and one_minus_z is None:
        raise TypeError("gauss_2f1_euler needs z or one_minus_z")
    _check_params(a, b, c, z, one_minus_z)
    lo, hi = (a, b) if a <= b else (b, a)
    if c <= lo:
        raise DomainError("Euler integral requires c > min(a, b)")
    log_1mz = math.log(one_minus_z) if one_minus_z is not None else math.log1p(-z)
    return _euler(lo, hi, c, log_1mz)
