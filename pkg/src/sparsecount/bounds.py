"""Closed-form risk expressions and bound calculators.

Each theorem-style calculator returns a :class:`BoundReport`.  All
``(1 + o(1))`` factors are dropped, so values are leading-order.  With
``strict=True`` (the default) a call outside the parameter regime raises
:class:`~sparsecount.errors.RegimeError`; with ``strict=False`` the value is
still computed where finite and the report carries ``valid=False`` and the
names of the violated preconditions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from scipy.special import betainc

from .errors import DomainError, RegimeError
from .priors import GlobalLocalPrior
from .samplers import TwoGroupModel, nb_cdf
from .rules import oracle_threshold

LOG_TWO_MINUS_HALF = 2.0 * math.log(2.0) - 1.0


@dataclass(frozen=True)
class BoundReport:
    name: str
    value: float
    valid: bool
    arguments: dict = field(default_factory=dict)
    violated: tuple = ()


def _report(name, value, arguments, violations, strict):
    if violations and strict:
        raise RegimeError(f"{name}: violated {', '.join(violations)} for {arguments}")
    return BoundReport(name, float(value), not violations, dict(arguments), tuple(violations))


def _safe_exp(x: float) -> float:
    return math.exp(x) if x < 709.0 else math.inf


def default_k_constants(prior: GlobalLocalPrior) -> tuple[float, float]:
    """``K0 = max(2, t0 + 1)`` and ``K1 = 10 K0``."""
    k0 = max(2.0, prior.t0 + 1.0)
    return k0, 10.0 * k0


def _k_violations(prior, K0, K1):
    return [] if K1 > K0 > max(1.0, prior.t0) else ["K1 > K0 > max(1, t0)"]


def _log_k_gap(a, K0, K1):
    # log(K0^-a - K1^-a)
    return -a * math.log(K0) + math.log1p(-math.exp(-a * (math.log(K1) - math.log(K0))))


# Risk expressions -----------------------------------------------------------

def bayes_risk_additive(t1: float, t2: float, p: float, n: int) -> float:
    """Additive 0-1 risk ``n [(1-p) t1 + p t2]`` with common error rates."""
    if not (0 <= t1 <= 1 and 0 <= t2 <= 1 and 0 < p < 1 and n >= 1):
        raise DomainError("need t1, t2 in [0, 1], p in (0, 1) and n >= 1")
    return n * ((1 - p) * t1 + p * t2)


def oracle_risk_asymptotic(model: TwoGroupModel, n: int) -> float:
    """Leading-order oracle risk ``n p (delta+1)^(-alpha)``."""
    return n * model.p * (model.delta + 1.0) ** (-model.alpha)


def oracle_error_rates(model: TwoGroupModel) -> tuple[float, float]:
    """Exact oracle type I and type II probabilities ``(t1, t2)``."""
    c = oracle_threshold(model)
    t1 = 1.0 - nb_cdf(c, model.alpha, model.q_null)
    t2 = nb_cdf(c, model.alpha, model.q_signal)
    return max(t1, 0.0), t2


def oracle_misclassification(model: TwoGroupModel) -> float:
    """Exact oracle misclassification probability per test."""
    t1, t2 = oracle_error_rates(model)
    return (1 - model.p) * t1 + model.p * t2


# Type I / type II and risk-ratio bounds -------------------------------------

def cdf_cutoff(a: float, alpha: float, delta: float) -> float:
    """``2a + alpha - 2(a + alpha)/(delta + 2)``; exceeds ``a`` whenever ``a + alpha > 0``."""
    return 2 * a + alpha - 2 * (a + alpha) / (delta + 2)


def type2_bound_tuned(a: float, alpha: float, delta: float, *, restricted: bool = False,
                      strict: bool = True) -> BoundReport:
    """Leading term of the tuned rule's type II bound.

    ``P(Y <= cutoff)`` with ``Y ~ NB(alpha, 1/(delta+1))``.  With
    ``restricted=True`` the event is ``a < Y <= cutoff`` instead.
    """
    if not (alpha > 0 and delta > 0):
        raise DomainError("alpha and delta must be positive")
    cut = cdf_cutoff(a, alpha, delta)
    q = 1.0 / (delta + 1.0)
    v = nb_cdf(cut, alpha, q)
    if restricted:
        v = max(0.0, v - nb_cdf(a, alpha, q))
    return _report("type2_bound_tuned", v, dict(a=a, alpha=alpha, delta=delta,
                                                restricted=restricted, cutoff=cut),
                   [] if a > 1 else ["a > 1"], strict)


def risk_ratio_upper_bound(a: float, alpha: float, delta: float, *, restricted: bool = False,
                           strict: bool = True) -> BoundReport:
    """``(delta+1)^alpha`` times :func:`type2_bound_tuned`."""
    t2 = type2_bound_tuned(a, alpha, delta, restricted=restricted, strict=strict)
    return BoundReport("risk_ratio_upper_bound", (delta + 1.0) ** alpha * t2.value,
                       t2.valid, t2.arguments, t2.violated)


def type1_bound_tuned(a: float, alpha: float, beta: float, *, strict: bool = True) -> BoundReport:
    """``2 alpha beta / a``."""
    return _report("type1_bound_tuned", 2 * alpha * beta / a, dict(a=a, alpha=alpha, beta=beta),
                   [] if a > 1 else ["a > 1"], strict)


def type1_bound_eb(a: float, alpha: float, beta: float, n: int, p: float, delta: float, *,
                   strict: bool = True) -> BoundReport:
    """``2 alpha beta / a + alpha beta + exp(-(2 log 2 - 1)(1 - (beta+delta+1)^-alpha) n p)``."""
    expo = LOG_TWO_MINUS_HALF * (1 - (beta + delta + 1) ** (-alpha)) * n * p
    v = 2 * alpha * beta / a + alpha * beta + math.exp(-expo)
    return _report("type1_bound_eb", v, dict(a=a, alpha=alpha, beta=beta, n=n, p=p, delta=delta),
                   [] if a > 1 else ["a > 1"], strict)


# Posterior concentration bounds ----------------------------------------------

def concentration_small_kappa_bound(prior: GlobalLocalPrior, alpha: float, y: int, tau: float,
                                    epsilon: float, K0: Optional[float] = None,
                                    K1: Optional[float] = None, *,
                                    strict: bool = True) -> BoundReport:
    """Upper bound on ``P(kappa < epsilon | y, tau)``."""
    if not 0 < epsilon < 1:
        raise DomainError("epsilon must lie in (0, 1)")
    K0, K1 = _fill_k(prior, K0, K1)
    viol = _k_violations(prior, K0, K1)
    a, t2 = prior.a, tau * tau
    args = dict(a=a, alpha=alpha, y=y, tau=tau, epsilon=epsilon, K0=K0, K1=K1)
    if viol and not K1 > K0:
        return _report("concentration_small_kappa_bound", math.nan, args, viol, strict)
    log_v = (math.log(a) - math.log(prior.c0) - math.log(a + alpha) - _log_k_gap(a, K0, K1)
             + (a - y) * math.log(t2) + (a + alpha) * (math.log(epsilon) - math.log1p(-epsilon))
             + float(prior.log_L(-math.log(t2))) + (y + alpha) * math.log1p(K1 * t2))
    return _report("concentration_small_kappa_bound", _safe_exp(log_v), args, viol, strict)


def shrinkage_mean_bound(prior: GlobalLocalPrior, alpha: float, y: int, tau: float,
                         K0: Optional[float] = None, K1: Optional[float] = None, *,
                         strict: bool = True) -> BoundReport:
    """Upper bound on ``E(1 - kappa | y, tau)`` for ``y < a - 1``."""
    K0, K1 = _fill_k(prior, K0, K1)
    viol = _k_violations(prior, K0, K1)
    a, t2 = prior.a, tau * tau
    if not y < a - 1:
        viol.append("y < a - 1")
    if prior.M is None:
        viol.append("upper bound M declared")
    args = dict(a=a, alpha=alpha, y=y, tau=tau, K0=K0, K1=K1)
    if viol:
        return _report("shrinkage_mean_bound", math.nan, args, viol, strict)
    log_v = (math.log(a) - math.log(prior.c0) - _log_k_gap(a, K0, K1) + math.log(t2)
             + math.log(1.0 / prior.K + prior.M / (a - y - 1))
             + (y + alpha) * math.log1p(K1 * t2))
    return _report("shrinkage_mean_bound", _safe_exp(log_v), args, viol, strict)


def concentration_large_kappa_bound(prior: GlobalLocalPrior, alpha: float, y: int, tau: float,
                                    eta: float, delta1: float, *,
                                    strict: bool = True) -> BoundReport:
    """Upper bound on ``P(kappa > eta | y, tau)``; needs ``(1/tau^2)(1/(eta delta1) - 1) >= t0``."""
    if not (0 < eta < 1 and 0 < delta1 < 1):
        raise DomainError("eta and delta1 must lie in (0, 1)")
    a, t2 = prior.a, tau * tau
    ed = eta * delta1
    viol = [] if (1.0 / ed - 1.0) / t2 >= prior.t0 else ["(1/tau^2)(1/(eta delta1) - 1) >= t0"]
    log_v = (math.log(a + alpha) - math.log(prior.K) - math.log(prior.c0) - a * math.log(t2)
             + y * (math.log1p(-eta) - math.log1p(-ed)) - (a + alpha) * math.log(ed))
    return _report("concentration_large_kappa_bound", _safe_exp(log_v),
                   dict(a=a, alpha=alpha, y=y, tau=tau, eta=eta, delta1=delta1), viol, strict)


def lemma2_lower_bound(prior: GlobalLocalPrior, alpha: float, y: int, tau: float,
                       K0: Optional[float] = None, K1: Optional[float] = None, *,
                       strict: bool = True) -> BoundReport:
    """Lower bound on the posterior normalizer of ``kappa``, reported on the natural scale.

    ``arguments["log_value"]`` holds the log, which stays finite when the
    value underflows.
    """
    K0, K1 = _fill_k(prior, K0, K1)
    viol = _k_violations(prior, K0, K1)
    a, t2 = prior.a, tau * tau
    args = dict(a=a, alpha=alpha, y=y, tau=tau, K0=K0, K1=K1)
    if viol and not K1 > K0:
        return _report("lemma2_lower_bound", math.nan, args, viol, strict)
    log_v = (math.log(prior.c0) + _log_k_gap(a, K0, K1) - math.log(a)
             + (y - a) * math.log(t2) - (y + alpha) * math.log1p(K1 * t2))
    args["log_value"] = log_v
    return _report("lemma2_lower_bound", _safe_exp(log_v), args, viol, strict)


def _fill_k(prior, K0, K1):
    K0 = default_k_constants(prior)[0] if K0 is None else float(K0)
    K1 = 10.0 * K0 if K1 is None else float(K1)
    return K0, K1


# Table 1 diagnostics ---------------------------------------------------------

TABLE1_PRINTED = (
    (1.1, 1.1, 0.5, 1.058),
    (1.2, 1.1, 0.5, 1.085),
    (1.3, 1.2, 0.5, 1.113),
    (1.5, 1.5, 1.0, 1.241),
    (1.2, 1.4, 1.0, 1.173),
    (1.3, 1.3, 1.0, 1.182),
    (1.3, 1.2, 2.0, 1.119),
    (1.4, 1.3, 2.0, 1.225),
    (1.2, 1.4, 2.0, 1.192),
)


def risk_ratio_conventions(a: float, alpha: float, delta: float) -> dict:
    """The risk-ratio bound under four readings of its negative binomial probability.

    ``literal``
        ``(delta+1)^alpha P(Y <= cutoff)``, pmf ``C(y+alpha-1, y) (1-q)^y q^alpha``, ``q = 1/(delta+1)``.
    ``swapped``
        Same with the roles of ``q`` and ``1-q`` exchanged.
    ``continuous``
        ``P(Y <= x)`` interpolated as the regularized incomplete beta ``I_q(alpha, x+1)``.
    ``restricted``
        The event ``a < Y <= cutoff``.
    """
    cut = cdf_cutoff(a, alpha, delta)
    q = 1.0 / (delta + 1.0)
    scale = (delta + 1.0) ** alpha
    return {
        "cutoff": cut,
        "literal": scale * nb_cdf(cut, alpha, q),
        "swapped": scale * nb_cdf(cut, alpha, 1.0 - q),
        "continuous": scale * float(betainc(alpha, cut + 1.0, q)),
        "restricted": scale * max(0.0, nb_cdf(cut, alpha, q) - nb_cdf(a, alpha, q)),
    }


def closest_convention(a: float, alpha: float, delta: float, printed: float,
                       tol: float = 5e-4) -> Optional[str]:
    """Name of the convention reproducing ``printed`` within ``tol``, if any."""
    conv = risk_ratio_conventions(a, alpha, delta)
    hits = [k for k in ("literal", "swapped", "continuous", "restricted")
            if abs(conv[k] - printed) <= tol]
    return hits[0] if hits else None
