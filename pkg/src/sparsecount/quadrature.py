"""Adaptive Gauss-Kronrod quadrature for positive integrands known on the log scale.

Every integral in this package is of a positive function that can span
hundreds of orders of magnitude, so integrands are passed as ``log f`` and
panel sums are accumulated with log-sum-exp.  Callers map their domain onto
the real line (log or logit substitution) so that the transformed integrand
is smooth with exponentially decaying tails; :func:`integrate_line` then
locates the region carrying the mass and hands it to the adaptive panel rule.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import logsumexp

from .errors import ConvergenceError, NonIntegrableError

LogIntegrand = Callable[[np.ndarray], np.ndarray]

# 15-point Kronrod extension of the 7-point Gauss-Legendre rule (QUADPACK qk15).
_XGK = np.array([
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
])
_WGK = np.array([
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
])
_WG = np.array([
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
])

NODES = np.concatenate([-_XGK[:-1], _XGK[::-1]])
KRONROD_WEIGHTS = np.concatenate([_WGK[:-1], _WGK[::-1]])
GAUSS_WEIGHTS = np.zeros(15)
GAUSS_WEIGHTS[1:7:2] = _WG[:3]
GAUSS_WEIGHTS[7] = _WG[3]
GAUSS_WEIGHTS[9:15:2] = _WG[:3][::-1]

_LOG_WK = np.log(KRONROD_WEIGHTS)
with np.errstate(divide="ignore"):
    _LOG_WG = np.log(GAUSS_WEIGHTS)

DEFAULT_MAX_PANELS = 10_000


@dataclass(frozen=True)
class LogIntegral:
    """Result of a log-domain quadrature."""

    log_value: float
    rel_error: float
    panels: int
    evaluations: int

    @property
    def value(self) -> float:
        return math.exp(self.log_value)


def _panel_sums(log_f: LogIntegrand, lo: np.ndarray, hi: np.ndarray):
    mid = 0.5 * (lo + hi)
    half = 0.5 * (hi - lo)
    x = mid[:, None] + half[:, None] * NODES[None, :]
    lv = np.asarray(log_f(x.ravel()), dtype=float).reshape(x.shape)
    if np.any(np.isnan(lv)) or np.any(lv == np.inf):
        raise ConvergenceError("integrand returned NaN or +inf on the log scale")
    log_half = np.log(half)
    log_k = logsumexp(lv + _LOG_WK, axis=1) + log_half
    log_g = logsumexp(lv + _LOG_WG, axis=1) + log_half
    with np.errstate(divide="ignore", invalid="ignore"):
        # |K - G| = K * |1 - exp(G - K)|
        log_err = log_k + np.log(np.abs(np.expm1(log_g - log_k)))
    log_err = np.where(np.isfinite(log_k), log_err, -np.inf)
    log_err = np.where(np.isnan(log_err), -np.inf, log_err)
    return log_k, log_err


def integrate(
    log_f: LogIntegrand,
    lo: float,
    hi: float,
    *,
    rtol: float = 1e-10,
    breakpoints: Sequence[float] = (),
    max_panels: int = DEFAULT_MAX_PANELS,
) -> LogIntegral:
    """Integrate ``exp(log_f)`` over the finite interval ``[lo, hi]``.

    ``log_f`` must accept a 1-d array and return log integrand values
    (``-inf`` for zeros).  The interval is first cut at ``breakpoints``;
    panels whose Kronrod/Gauss discrepancy is above their share of the
    target are bisected until the summed discrepancy is below
    ``rtol`` times the integral.

    Raises
    ------
    ConvergenceError
        If the panel budget is exhausted before the target is met.
    """
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi <= lo:
        raise ValueError(f"need finite lo < hi, got [{lo}, {hi}]")
    edges = np.unique(np.concatenate([[lo, hi], [b for b in breakpoints if lo < b < hi]]))
    a, b = edges[:-1], edges[1:]
    lk, le = _panel_sums(log_f, a, b)
    evaluations = 15 * a.size
    while True:
        log_total = logsumexp(lk)
        if log_total == -np.inf:
            return LogIntegral(-np.inf, 0.0, a.size, evaluations)
        log_err = logsumexp(le)
        if log_err <= log_total + math.log(rtol):
            return LogIntegral(float(log_total), float(math.exp(log_err - log_total)),
                               a.size, evaluations)
        # Bisect panels above their per-panel share of the error target.
        share = log_total + math.log(rtol) - math.log(a.size)
        bad = le > share
        if not np.any(bad):
            bad = le >= np.max(le)
        if a.size + np.count_nonzero(bad) > max_panels:
            raise ConvergenceError(
                f"quadrature exceeded {max_panels} panels "
                f"(relative error estimate {math.exp(log_err - log_total):.3g})")
        a_bad, b_bad = a[bad], b[bad]
        m = 0.5 * (a_bad + b_bad)
        na = np.concatenate([a_bad, m])
        nb = np.concatenate([m, b_bad])
        nk, ne = _panel_sums(log_f, na, nb)
        evaluations += 15 * na.size
        a = np.concatenate([a[~bad], na])
        b = np.concatenate([b[~bad], nb])
        lk = np.concatenate([lk[~bad], nk])
        le = np.concatenate([le[~bad], ne])


def integrate_line(
    log_f: LogIntegrand,
    *,
    lower: float = -math.inf,
    upper: float = math.inf,
    center: float = 0.0,
    rtol: float = 1e-10,
    step: float = 0.25,
    half_width: float = 64.0,
    cut: float = 80.0,
    max_extent: float = 1e4,
    max_panels: int = DEFAULT_MAX_PANELS,
) -> LogIntegral:
    """Integrate ``exp(log_f)`` over ``(lower, upper)``, either end possibly infinite.

    A grid of spacing ``step`` around ``center`` is scanned and widened until
    the log integrand at each infinite end is ``cut`` units below its
    maximum.  Mass outside that window is below ``exp(-cut)`` of the peak
    and is dropped.  The window is split into unit-width panels and passed
    to :func:`integrate`.

    Raises
    ------
    NonIntegrableError
        If the integrand fails to decay toward an infinite end within
        ``max_extent``.
    """
    if not lower < upper:
        raise ValueError("need lower < upper")
    center = min(max(center, lower), upper)
    left = max(lower, center - half_width)
    right = min(upper, center + half_width)

    def scan(a: float, b: float) -> tuple[np.ndarray, np.ndarray]:
        n = max(2, int(math.ceil((b - a) / step)) + 1)
        x = np.linspace(a, b, n)
        return x, np.asarray(log_f(x), dtype=float)

    xs, lv = scan(left, right)
    if np.any(np.isnan(lv)):
        raise ConvergenceError("integrand returned NaN during scan")
    span = right - left
    while True:
        peak = np.max(lv)
        if peak == -np.inf:
            return LogIntegral(-np.inf, 0.0, 0, xs.size)
        grow_left = not math.isfinite(lower) and lv[0] > peak - cut
        grow_right = not math.isfinite(upper) and lv[-1] > peak - cut
        if not (grow_left or grow_right):
            break
        if span > max_extent:
            side = "lower" if grow_left else "upper"
            raise NonIntegrableError(f"integrand does not decay toward the {side} end")
        if grow_left:
            nx, nl = scan(xs[0] - span, xs[0] - step)
            xs, lv = np.concatenate([nx, xs]), np.concatenate([nl, lv])
        if grow_right:
            nx, nl = scan(xs[-1] + step, xs[-1] + span)
            xs, lv = np.concatenate([xs, nx]), np.concatenate([lv, nl])
        span = xs[-1] - xs[0]

    keep = np.nonzero(lv > peak - cut)[0]
    i0, i1 = max(keep[0] - 1, 0), min(keep[-1] + 1, xs.size - 1)
    a = xs[i0] if i0 > 0 or not math.isfinite(lower) else lower
    b = xs[i1] if i1 < xs.size - 1 or not math.isfinite(upper) else upper
    if math.isfinite(lower):
        a = max(a, lower)
    if math.isfinite(upper):
        b = min(b, upper)
    if b <= a:
        return LogIntegral(-np.inf, 0.0, 0, xs.size)
    n_cuts = int(math.ceil(b - a))
    cuts = np.linspace(a, b, n_cuts + 1)[1:-1] if n_cuts > 1 else ()
    res = integrate(log_f, a, b, rtol=rtol, breakpoints=cuts, max_panels=max_panels)
    return LogIntegral(res.log_value, res.rel_error, res.panels, res.evaluations + xs.size)


def log_sigmoid(v: np.ndarray) -> np.ndarray:
    """``log(1 / (1 + exp(-v)))`` without overflow."""
    return -np.logaddexp(0.0, -v)
