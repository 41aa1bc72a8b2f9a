"""Multiple-testing decision rules: the Bayes oracle and the one-group rules.

Every rule rejects ``H0_i`` when its evidence is strictly above its
threshold; ties accept.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass
from typing import Iterator, Optional

import numpy as np

from .errors import DomainError
from .posterior import Prior, ShrinkageCache
from .samplers import TwoGroupModel, nb_logpmf


class RuleTag(str, enum.Enum):
    ORACLE = "ORACLE"
    ONE_GROUP_TUNED = "ONE_GROUP_TUNED"
    ONE_GROUP_EB = "ONE_GROUP_EB"
    GH = "GH"


@dataclass(frozen=True)
class DecisionOutcome:
    index: int
    evidence: float
    threshold: float
    reject: bool
    rule_tag: RuleTag


@dataclass(frozen=True)
class DecisionSet:
    """Decisions for all ``n`` hypotheses under one rule.

    Stored as arrays; indexing or iterating yields :class:`DecisionOutcome`.
    ``tau`` is the global scale used by one-group rules (``None`` for the oracle).
    """

    counts: np.ndarray
    evidence: np.ndarray
    threshold: float
    rule_tag: RuleTag
    tau: Optional[float] = None

    @property
    def reject(self) -> np.ndarray:
        return self.evidence > self.threshold

    def __len__(self) -> int:
        return int(self.evidence.size)

    def __getitem__(self, i: int) -> DecisionOutcome:
        ev = float(self.evidence[i])
        return DecisionOutcome(int(i), ev, self.threshold, ev > self.threshold, self.rule_tag)

    def __iter__(self) -> Iterator[DecisionOutcome]:
        return (self[i] for i in range(len(self)))

    def to_csv(self, path) -> None:
        """Write ``index,count,evidence,threshold,reject,rule`` rows."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["index", "count", "evidence", "threshold", "reject", "rule"])
            for o, c in zip(self, self.counts):
                w.writerow([o.index, int(c), f"{o.evidence:.6g}", f"{o.threshold:.6g}",
                            int(o.reject), o.rule_tag.value])


@dataclass(frozen=True)
class TauHatConfig:
    """Count threshold ``k`` in ``tau_hat = max(1/n, #{Y_i >= k} / n)``."""

    k: int = 1

    def __post_init__(self):
        if int(self.k) != self.k or self.k < 1:
            raise DomainError(f"k must be a positive integer, got {self.k}")


def _counts(counts) -> np.ndarray:
    arr = np.asarray(counts)
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError("counts must be a nonempty 1-d sequence")
    if np.any(arr < 0) or np.any(arr != np.floor(arr)):
        raise DomainError("counts must be nonnegative integers")
    return arr.astype(np.int64)


def oracle_threshold(model: TwoGroupModel) -> float:
    """Count threshold ``C`` above which the Bayes oracle rejects.

    ``C = [log((1-p)/p) + alpha log((b+d+1)/(b+1))] / log[(b+d)(b+1) / (b(b+d+1))]``.
    """
    b, d, a = model.beta, model.delta, model.alpha
    num = math.log1p(-model.p) - math.log(model.p) + a * (math.log1p(b + d) - math.log1p(b))
    den = math.log(b + d) + math.log1p(b) - math.log(b) - math.log1p(b + d)
    if not den > 0:
        raise DomainError("degenerate model: components are identical")
    return num / den


def oracle_decide(model: TwoGroupModel, counts) -> DecisionSet:
    """Bayes oracle: reject when ``Y_i > C``."""
    y = _counts(counts)
    return DecisionSet(y, y.astype(float), oracle_threshold(model), RuleTag.ORACLE)


def likelihood_ratio_decide(model: TwoGroupModel, counts) -> np.ndarray:
    """Reject when ``f1(Y_i) / f0(Y_i) > (1-p)/p``, on the log scale.

    This is the form the oracle threshold rearranges; kept for cross-checking.
    """
    y = _counts(counts)
    log_lr = nb_logpmf(y, model.alpha, model.q_signal) - nb_logpmf(y, model.alpha, model.q_null)
    return np.asarray(log_lr) > math.log1p(-model.p) - math.log(model.p)


def default_threshold(delta: float) -> float:
    """``delta / (2 (delta + 1))``, derived for negligible null scale ``beta``."""
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    return delta / (2.0 * (delta + 1.0))


def tau_hat(counts, config: TauHatConfig = TauHatConfig()) -> float:
    """Empirical Bayes global scale, floored at ``1/n``."""
    y = _counts(counts)
    n = y.size
    return max(1.0 / n, np.count_nonzero(y >= config.k) / n)


def one_group_decide_tuned(prior: Prior, alpha: float, delta: float, tau: float, counts, *,
                           threshold: Optional[float] = None,
                           cache: Optional[ShrinkageCache] = None,
                           tag: RuleTag = RuleTag.ONE_GROUP_TUNED) -> DecisionSet:
    """Reject when ``E(1 - kappa_i | Y_i, tau) > threshold`` at a caller-fixed ``tau``.

    ``threshold`` defaults to :func:`default_threshold`.  ``delta`` is the
    signal scale increment, assumed known.  Pass a :class:`ShrinkageCache`
    to share posterior evaluations across calls.
    """
    y = _counts(counts)
    thr = default_threshold(delta) if threshold is None else float(threshold)
    if cache is None:
        cache = ShrinkageCache(prior, alpha)
    elif cache.prior is not prior or cache.alpha != alpha:
        raise ValueError("cache was built for a different prior or alpha")
    return DecisionSet(y, cache.e_one_minus_kappa(y, tau), thr, tag, float(tau))


def one_group_decide_eb(prior: Prior, alpha: float, delta: float, counts,
                        config: TauHatConfig = TauHatConfig(), *,
                        threshold: Optional[float] = None,
                        cache: Optional[ShrinkageCache] = None) -> DecisionSet:
    """The tuned rule with ``tau`` replaced by :func:`tau_hat` of the same counts."""
    t = tau_hat(counts, config)
    return one_group_decide_tuned(prior, alpha, delta, t, counts, threshold=threshold,
                                  cache=cache, tag=RuleTag.ONE_GROUP_EB)
