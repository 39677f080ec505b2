"""Bootstrap confidence intervals and the DeLong paired ROC-AUC test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from ._ranks import midranks
from .core import Columns, PredictionLog, decide
from .errors import DegenerateLabels, EmptyLog, LengthMismatch, ReliabilityError
from . import metrics

__all__ = [
    "BootstrapResult", "DeLongResult", "bootstrap_ci", "delong_test", "midranks",
    "stat_accuracy", "stat_auc", "stat_brier", "stat_ece", "stat_nll",
]

DEGENERATE_VAR = 1e-15


@dataclass(frozen=True)
class BootstrapResult:
    point: float
    mean: float
    ci_low: float
    ci_high: float
    B: int
    level: float
    n_skipped: int = 0


def bootstrap_ci(statistic, log: PredictionLog | Columns, B: int = 1000, level: float = 0.95,
                 seed: int = 0) -> BootstrapResult:
    """Percentile bootstrap of ``statistic`` over records.

    ``statistic`` receives a :class:`~reliabench.core.Columns` view (resampled
    rows may repeat). Resample ``r`` draws from ``default_rng([seed, r])``, so
    the result does not depend on evaluation order. Resamples on which the
    statistic raises a :class:`ReliabilityError` (e.g. single-class AUC) are
    skipped and counted.
    """
    if B < 1:
        raise ValueError("B must be >= 1")
    if not 0.0 < level < 1.0:
        raise ValueError("level must be in (0, 1)")
    cols = log.columns() if isinstance(log, PredictionLog) else log
    n = len(cols)
    if n == 0:
        raise EmptyLog("cannot bootstrap an empty log")
    point = float(statistic(cols))
    values, skipped = [], 0
    for r in range(B):
        idx = np.random.default_rng([seed, r]).integers(0, n, size=n)
        try:
            values.append(float(statistic(cols.take(idx))))
        except ReliabilityError:
            skipped += 1
    if not values:
        raise DegenerateLabels("statistic undefined on every resample")
    v = np.asarray(values)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(v, [alpha, 1.0 - alpha])
    return BootstrapResult(point=point, mean=float(v.mean()), ci_low=float(lo), ci_high=float(hi),
                           B=B, level=level, n_skipped=skipped)


def stat_accuracy(threshold=0.5):
    return lambda c: float(np.mean(decide(c.probs, threshold) == c.labels))


def stat_ece(n_bins=metrics.DEFAULT_ECE_BINS, mode="positive_prob"):
    return lambda c: metrics.ece(c.probs, c.labels, n_bins, mode)


def stat_brier(c: Columns) -> float:
    return metrics.brier(c.probs, c.labels)


def stat_nll(c: Columns) -> float:
    return metrics.nll(c.probs, c.labels)


def stat_auc(c: Columns) -> float:
    return metrics.roc_auc(c.probs, c.labels)


@dataclass(frozen=True)
class DeLongResult:
    auc_a: float
    auc_b: float
    delta: float
    variance_of_delta: float
    z: float
    p_two_sided: float
    degenerate: bool = False

    def decision(self, alpha=0.05) -> str:
        return "sig." if self.p_two_sided < alpha else "n.s."


def _placements(scores, pos, neg):
    """Structural components: V10 per positive, V01 per negative, and the AUC."""
    m, n = pos.sum(), neg.sum()
    r_all = midranks(scores)
    r_pos = midranks(scores[pos])
    r_neg = midranks(scores[neg])
    v10 = (r_all[pos] - r_pos) / n
    v01 = 1.0 - (r_all[neg] - r_neg) / m
    auc = (r_all[pos].sum() - m * (m + 1) / 2.0) / (m * n)
    return v10, v01, float(auc)


def delong_test(scores_a, scores_b, labels) -> DeLongResult:
    """Two-sided DeLong test for ``AUC(b) - AUC(a)`` on paired scores.

    Uses the midrank/placement-value formulation; the p-value comes from the
    normal approximation. When the variance of the difference is (numerically)
    zero the result is flagged ``degenerate`` with ``p = 1`` if the AUCs are
    equal and ``p = 0`` otherwise.
    """
    a = np.asarray(scores_a, dtype=np.float64).ravel()
    b = np.asarray(scores_b, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel().astype(np.int64)
    if not (a.size == b.size == y.size):
        raise LengthMismatch("scores_a, scores_b and labels must have equal length")
    pos, neg = y == 1, y == 0
    m, n = int(pos.sum()), int(neg.sum())
    if m == 0 or n == 0:
        raise DegenerateLabels("DeLong test needs both classes")

    v10a, v01a, auc_a = _placements(a, pos, neg)
    v10b, v01b, auc_b = _placements(b, pos, neg)
    d10 = v10b - v10a
    d01 = v01b - v01a
    var10 = float(np.var(d10, ddof=1)) if m > 1 else 0.0
    var01 = float(np.var(d01, ddof=1)) if n > 1 else 0.0
    var = max(var10 / m + var01 / n, 0.0)
    delta = auc_b - auc_a
    if var <= DEGENERATE_VAR:
        p = 1.0 if delta == 0.0 else 0.0
        z = 0.0 if delta == 0.0 else math.copysign(math.inf, delta)
        return DeLongResult(auc_a, auc_b, delta, var, z, p, degenerate=True)
    z = delta / math.sqrt(var)
    p = float(min(1.0, 2.0 * norm.sf(abs(z))))
    return DeLongResult(auc_a, auc_b, delta, var, z, p)
