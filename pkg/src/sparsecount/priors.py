"""One-group local shrinkage priors.

A :class:`GlobalLocalPrior` describes the density of the local scale
``lambda^2`` in the form ``K * t**(-a-1) * L(t)`` with ``L`` slowly varying.
``L`` is stored as a vectorized function of ``u = log t`` returning
``log L``, since every consumer integrates on the log scale.

The Gauss-hypergeometric family is defined directly on the shrinkage
coefficient ``kappa = 1 / (1 + lambda^2 tau^2)`` and depends on ``tau``, so
it is a separate type.
"""

from __future__ import annotations

import enum
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.special import gammaln

from .errors import DomainError
from .quadrature import integrate_line
from .specfun import gauss_2f1, log_beta

LogLFunction = Callable[[np.ndarray], np.ndarray]

GRID_LOG10_RANGE = (-6.0, 12.0)


class Family(str, enum.Enum):
    TPBN = "TPBN"
    GDP = "GDP"
    GH = "GH"
    GENERIC = "GENERIC"


@dataclass(frozen=True)
class GlobalLocalPrior:
    """Local-scale prior ``K t^(-a-1) L(t)`` with its assumption constants.

    Attributes
    ----------
    a : float
        Tail exponent.
    K : float
        Normalizer.
    log_L : callable
        ``u -> log L(exp(u))``, vectorized over numpy arrays.
    c0, t0 : float
        Lower-bound constants: ``L(t) >= c0`` for ``t >= t0``.
    M : float or None
        Upper bound on ``L``; ``None`` when no bound is known.
    """

    family: Family
    a: float
    K: float
    log_L: LogLFunction = field(repr=False, compare=False)
    c0: float
    t0: float
    M: Optional[float]
    a1: Optional[float] = None
    a2: Optional[float] = None

    def L(self, t):
        """Slowly varying factor evaluated at ``t > 0``."""
        t = np.asarray(t, dtype=float)
        out = np.exp(self.log_L(np.log(t)))
        return out if out.ndim else float(out)

    @property
    def log_K(self) -> float:
        return math.log(self.K)

    @property
    def guarantee_regime(self) -> bool:
        """Whether ``a > 1``, the regime needed by most of the risk results."""
        return self.a > 1

    def lambda2_log_density(self, t):
        """Log density of ``lambda^2`` at ``t``."""
        u = np.log(np.asarray(t, dtype=float))
        return self.log_K - (self.a + 1) * u + self.log_L(u)

    def kappa_log_density(self, kappa, tau: float):
        """Log density of ``kappa = 1/(1 + lambda^2 tau^2)`` induced at fixed ``tau``."""
        kappa = np.asarray(kappa, dtype=float)
        log_t = np.log1p(-kappa) - np.log(kappa) - 2 * math.log(tau)
        # d lambda^2 / d kappa = 1 / (tau^2 kappa^2)
        return (self.log_K - (self.a + 1) * log_t + self.log_L(log_t)
                - 2 * math.log(tau) - 2 * np.log(kappa))

    def as_gh(self) -> "GaussHypergeometricPrior":
        """The equivalent GH prior on ``kappa``; only TPBN has one."""
        if self.family is not Family.TPBN:
            raise DomainError(f"{self.family.value} prior has no GH representation")
        return GaussHypergeometricPrior(self.a2, self.a1, self.a1 + self.a2)


@dataclass(frozen=True)
class GaussHypergeometricPrior:
    """GH prior ``C2 k^(a1-1) (1-k)^(a2-1) (1-(1-tau^2) k)^(-gamma)`` on ``kappa``."""

    a1: float
    a2: float
    gamma: float
    family: Family = field(default=Family.GH, init=False)

    def __post_init__(self):
        for name in ("a1", "a2", "gamma"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"GH {name} must be positive, got {v}")

    def log_normalizer(self, tau: float) -> float:
        """``log C2^{-1} = log B(a1, a2) + log 2F1(gamma, a1; a1+a2; 1-tau^2)``."""
        _check_tau(tau)
        f = gauss_2f1(self.gamma, self.a1, self.a1 + self.a2, one_minus_z=tau * tau)
        return log_beta(self.a1, self.a2) + f.log_value

    def log_kernel(self, kappa, tau: float):
        kappa = np.asarray(kappa, dtype=float)
        log_bracket = np.logaddexp(np.log1p(-kappa), 2 * math.log(tau) + np.log(kappa))
        return ((self.a1 - 1) * np.log(kappa) + (self.a2 - 1) * np.log1p(-kappa)
                - self.gamma * log_bracket)

    def log_density(self, kappa, tau: float):
        return self.log_kernel(kappa, tau) - self.log_normalizer(tau)


def _check_tau(tau):
    if not 0 < tau <= 1:
        raise DomainError(f"tau must lie in (0, 1], got {tau}")


def gh_prior_density(prior: GaussHypergeometricPrior, kappa: float, tau: float) -> float:
    """GH density of ``kappa`` at global scale ``tau``."""
    if not 0 < kappa < 1:
        raise DomainError("kappa must lie strictly inside (0, 1)")
    _check_tau(tau)
    return float(np.exp(prior.log_density(kappa, tau)))


def make_tpbn(a1: float, a2: float) -> GlobalLocalPrior:
    """Three-parameter beta normal prior; ``a1 = a2 = 0.5`` is the horseshoe."""
    if not (a1 > 0 and a2 > 0):
        raise DomainError("TPBN hyperparameters must be positive")
    s = a1 + a2

    def log_L(u):
        # (1 + 1/t)^(-(a1+a2))
        return -s * np.logaddexp(0.0, -np.asarray(u, dtype=float))

    return GlobalLocalPrior(Family.TPBN, a=float(a2), K=math.exp(-log_beta(a1, a2)),
                            log_L=log_L, c0=2.0 ** (-s), t0=1.0, M=1.0,
                            a1=float(a1), a2=float(a2))


def _gdp_log_mode(a1, log_c):
    # Mode of w^(2a1+2) exp(-w^2 - c w), from 2w^2 + c w - (2a1+2) = 0.
    k = 4.0 * (a1 + 1.0)
    big = log_c > 300.0
    safe_c = np.exp(np.where(big, 0.0, log_c))
    small_root = np.log(k) - np.log(safe_c + np.sqrt(safe_c * safe_c + 4.0 * k))
    return np.where(big, math.log(2.0 * (a1 + 1.0)) - log_c, small_root)


def gdp_log_L(u, a1: float, a2: float, step: float = 0.05):
    """``log L`` for the generalized double Pareto prior.

    With ``z = w^2`` and ``w = e^s`` the defining integral becomes
    ``2^a1 * int exp((2a1+2)s - e^(2s) - c e^s) ds`` with ``c = a2 sqrt(2/t)``.
    The integrand is smooth with exponential tails, so a trapezoid rule
    centred on its mode converges geometrically in ``1/step``.
    """
    u = np.atleast_1d(np.asarray(u, dtype=float))
    log_c = math.log(a2) + 0.5 * math.log(2.0) - 0.5 * u
    s_mode = _gdp_log_mode(a1, log_c)
    left = 2.0 + 90.0 / (2.0 * a1 + 2.0)
    offsets = np.arange(-left, 6.0 + step / 2, step)
    s = s_mode[:, None] + offsets[None, :]
    es = np.exp(s)
    g = (2 * a1 + 2) * s - es * es - np.exp(log_c)[:, None] * es
    peak = np.max(g, axis=1, keepdims=True)
    log_int = peak[:, 0] + np.log(np.sum(np.exp(g - peak), axis=1) * step)
    return a1 * math.log(2.0) + log_int


def gdp_L_limit(a1: float) -> float:
    """``lim_{t -> inf} L(t) = 2^(a1-1) Gamma(a1+1)``."""
    return math.exp((a1 - 1) * math.log(2.0) + gammaln(a1 + 1))


def make_gdp(a1: float, a2: float) -> GlobalLocalPrior:
    """Generalized double Pareto prior with ``K`` fixed by numerical normalization."""
    if not (a1 > 0 and a2 > 0):
        raise DomainError("GDP hyperparameters must be positive")
    if a1 <= 2:
        warnings.warn(f"GDP a1={a1} <= 2 lies outside the regime covered by the risk bounds",
                      stacklevel=2)

    def log_L(u):
        u = np.asarray(u, dtype=float)
        out = gdp_log_L(u.ravel(), a1, a2)
        return out.reshape(u.shape) if u.ndim else float(out[0])

    # K = 1 / int t^(-a-1) L(t) dt; on u = log t the integrand is exp(-a u + log L).
    norm = integrate_line(lambda u: -a1 * u + log_L(u), rtol=1e-10)
    K = math.exp(-norm.log_value)
    grid = np.linspace(*GRID_LOG10_RANGE, 400) * math.log(10.0)
    M = max(float(np.max(np.exp(log_L(grid)))), gdp_L_limit(a1))
    return GlobalLocalPrior(Family.GDP, a=float(a1), K=K, log_L=log_L,
                            c0=math.exp(log_L(0.0)), t0=1.0, M=M,
                            a1=float(a1), a2=float(a2))


def make_generic(L: Callable[[np.ndarray], np.ndarray], *, a: float, K: float,
                 c0: float, t0: float, M: Optional[float] = None) -> GlobalLocalPrior:
    """Wrap a user-supplied ``L(t)`` with declared constants.

    Nothing is verified here; see :func:`check_assumption2`.  Posterior
    quadrature raises :class:`~sparsecount.errors.NonIntegrableError` when the
    kernel does not decay.
    """
    if not (K > 0 and c0 > 0 and t0 > 0):
        raise DomainError("K, c0 and t0 must be positive")

    def log_L(u):
        with np.errstate(divide="ignore"):
            return np.log(np.asarray(L(np.exp(u)), dtype=float))

    return GlobalLocalPrior(Family.GENERIC, a=float(a), K=float(K), log_L=log_L,
                            c0=float(c0), t0=float(t0), M=M)


@dataclass(frozen=True)
class Assumption2Report:
    """Grid check of ``L >= c0`` beyond ``t0`` (A1) and ``L <= M`` everywhere (A2).

    ``a2_ok`` is False when the prior declares no ``M``.
    """

    a1_ok: bool
    a2_ok: bool
    c0_observed: float
    M_observed: float


def check_assumption2(prior: GlobalLocalPrior, grid_size: int = 400) -> Assumption2Report:
    """Evaluate ``L`` on a log grid over ``[1e-6, 1e12]`` and compare with the declared constants."""
    if grid_size < 100:
        raise DomainError("grid_size must be at least 100")
    u = np.linspace(*GRID_LOG10_RANGE, grid_size) * math.log(10.0)
    u = np.union1d(u, [math.log(prior.t0)])
    vals = np.exp(np.asarray(prior.log_L(u), dtype=float))
    beyond = vals[u >= math.log(prior.t0) - 1e-12]
    c0_obs = float(np.min(beyond))
    M_obs = float(np.max(vals))
    a1_ok = c0_obs >= prior.c0 * (1 - 1e-9)
    a2_ok = prior.M is not None and M_obs <= prior.M * (1 + 1e-9)
    return Assumption2Report(bool(a1_ok), bool(a2_ok), c0_obs, M_obs)


def prior_from_config(cfg: dict):
    """Build a prior from ``{"family": ..., "a1": ..., "a2": ..., "gamma": ...}``."""
    try:
        fam = cfg["family"]
        family = Family(fam.value if isinstance(fam, Family) else str(fam).upper())
        a1, a2 = float(cfg["a1"]), float(cfg["a2"])
    except (KeyError, ValueError) as exc:
        raise DomainError(f"bad prior config {cfg!r}: {exc}") from exc
    if family is Family.TPBN:
        return make_tpbn(a1, a2)
    if family is Family.GDP:
        return make_gdp(a1, a2)
    if family is Family.GH:
        if "gamma" not in cfg:
            raise DomainError("GH prior config needs gamma")
        return GaussHypergeometricPrior(a1, a2, float(cfg["gamma"]))
    raise DomainError("GENERIC priors cannot be built from a config file")
