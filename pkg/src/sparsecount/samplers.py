"""Two-group Gamma-Poisson data generation and negative binomial probabilities.

Gamma variates use the scale parametrization (mean ``shape * scale``) so
the marginal count under ``Ga(alpha, beta)`` is negative binomial with
success probability ``1 / (beta + 1)``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy.special import gammaln

from .errors import DomainError


@dataclass(frozen=True)
class TwoGroupModel:
    """Mixture ``(1-p) Ga(alpha, beta) + p Ga(alpha, beta+delta)`` for the Poisson means."""

    alpha: float
    beta: float
    delta: float
    p: float

    def __post_init__(self):
        for name in ("alpha", "beta", "delta"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise DomainError(f"{name} must be positive and finite, got {v}")
        if not 0 < self.p < 1:
            raise DomainError(f"p must lie strictly inside (0, 1), got {self.p}")

    @property
    def q_null(self) -> float:
        """NB success probability of a null count."""
        return 1.0 / (self.beta + 1.0)

    @property
    def q_signal(self) -> float:
        """NB success probability of a non-null count."""
        return 1.0 / (self.beta + self.delta + 1.0)

    def marginal_pmf(self, y) -> np.ndarray:
        """Mixture of the two negative binomial marginals."""
        return ((1 - self.p) * nb_pmf(y, self.alpha, self.q_null)
                + self.p * nb_pmf(y, self.alpha, self.q_signal))


@dataclass(frozen=True)
class GeneratedDataset:
    counts: np.ndarray
    truth: np.ndarray
    seed: int

    def __post_init__(self):
        if self.counts.shape != self.truth.shape:
            raise ValueError("counts and truth must have equal length")

    @property
    def n(self) -> int:
        return int(self.counts.size)

    def to_csv(self, path) -> None:
        """Write ``index,count,truth`` rows."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "count", "truth"])
            for i, (c, t) in enumerate(zip(self.counts, self.truth)):
                w.writerow([i, int(c), int(t)])

    @classmethod
    def from_csv(cls, path, seed: int = 0) -> "GeneratedDataset":
        counts, truth = [], []
        with open(Path(path), newline="") as fh:
            for row in csv.DictReader(fh):
                counts.append(int(row["count"]))
                truth.append(int(row["truth"]))
        return cls(np.asarray(counts, dtype=np.int64), np.asarray(truth, dtype=np.int8), seed)


def _check_nb(size, q):
    if not (size > 0 and math.isfinite(size)):
        raise DomainError(f"size must be positive, got {size}")
    if not 0 < q < 1:
        raise DomainError(f"success_prob must lie in (0, 1), got {q}")


def nb_logpmf(y, size: float, success_prob: float):
    """Log pmf ``log C(y+size-1, y) + y log(1-q) + size log q`` for integer ``y >= 0``."""
    _check_nb(size, success_prob)
    y = np.asarray(y)
    if np.any(y < 0) or np.any(y != np.floor(y)):
        raise DomainError("y must be a nonnegative integer")
    yf = y.astype(float)
    out = (gammaln(yf + size) - gammaln(yf + 1) - gammaln(size)
           + yf * math.log1p(-success_prob) + size * math.log(success_prob))
    return out if out.ndim else float(out)


def nb_pmf(y, size: float, success_prob: float):
    """Negative binomial probability of ``y`` failures before ``size`` successes."""
    return np.exp(nb_logpmf(y, size, success_prob))


def nb_cdf(y: float, size: float, success_prob: float) -> float:
    """``P(Y <= y)`` as an explicit sum of pmf terms up to ``floor(y)``; zero for ``y < 0``."""
    _check_nb(size, success_prob)
    if y < 0:
        return 0.0
    k = np.arange(int(math.floor(y)) + 1)
    return float(min(1.0, math.fsum(nb_pmf(k, size, success_prob))))


def gamma_sample(shape: float, scale: float, rng: np.random.Generator, size=None):
    """Gamma variates in the scale parametrization."""
    if not (shape > 0 and scale > 0):
        raise DomainError("gamma shape and scale must be positive")
    return rng.gamma(shape, scale, size=size)


def poisson_sample(mean, rng: np.random.Generator, size=None):
    """Poisson variates; a zero mean always gives zero."""
    mean = np.asarray(mean, dtype=float)
    if np.any(mean < 0) or not np.all(np.isfinite(mean)):
        raise DomainError("Poisson mean must be finite and nonnegative")
    return rng.poisson(mean, size=size)


def make_rng(seed: int, *keys: int) -> np.random.Generator:
    """Independent generator for ``seed`` and any integer sub-keys (replication, cell, ...)."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, keys)]))


def generate_two_group(model: TwoGroupModel, n: int, seed: int,
                       keys: Sequence[int] = ()) -> GeneratedDataset:
    """Draw labels, Gamma means and Poisson counts for ``n`` units.

    The draw is a pure function of ``(seed, keys)``.
    """
    if n < 1:
        raise DomainError("n must be at least 1")
    rng = make_rng(seed, *keys)
    truth = (rng.random(n) < model.p).astype(np.int8)
    scale = np.where(truth == 1, model.beta + model.delta, model.beta)
    theta = rng.gamma(model.alpha, scale)
    counts = rng.poisson(theta).astype(np.int64)
    return GeneratedDataset(counts, truth, int(seed))
