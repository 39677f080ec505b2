"""Discrimination and calibration metrics.

All functions take plain arrays (``probs``, ``labels``) except
:func:`confusion_at_threshold` and :func:`metric_report`, which take a
:class:`~reliabench.core.PredictionLog`.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._ranks import midranks
from .core import EPS, ConfusionCounts, PredictionLog
from .errors import DegenerateLabels, EmptyLog, LengthMismatch

ECE_MODES = ("positive_prob", "max_confidence")
DEFAULT_ECE_BINS = 15
REPORT_COLUMNS = ("Acc", "AUC", "ECE", "Brier", "NLL", "TP", "FP", "TN", "FN")


def _pair(scores, labels):
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = np.asarray(labels).ravel()
    if s.shape != y.shape:
        raise LengthMismatch(f"{s.size} scores vs {y.size} labels")
    return s, y.astype(np.int64)


def confusion(probs, labels, threshold=0.5) -> ConfusionCounts:
    p, y = _pair(probs, labels)
    if p.size == 0:
        raise EmptyLog("cannot compute a confusion matrix on no records")
    pred = p >= threshold
    pos = y == 1
    return ConfusionCounts(
        tp=int(np.sum(pred & pos)),
        fp=int(np.sum(pred & ~pos)),
        tn=int(np.sum(~pred & ~pos)),
        fn=int(np.sum(~pred & pos)),
    )


def confusion_at_threshold(log: PredictionLog, threshold=0.5) -> ConfusionCounts:
    return confusion(log.probs(), log.labels(), threshold)


def accuracy(counts: ConfusionCounts) -> float:
    return (counts.tp + counts.tn) / counts.n


def roc_auc(scores, labels) -> float:
    """ROC-AUC as the Mann-Whitney statistic with half credit for ties.

    Raises :class:`DegenerateLabels` unless both classes are present.
    """
    s, y = _pair(scores, labels)
    m = int(np.sum(y == 1))
    n = y.size - m
    if m == 0 or n == 0:
        raise DegenerateLabels("ROC-AUC needs both classes")
    r = midranks(s)
    u = r[y == 1].sum() - m * (m + 1) / 2.0
    return float(u / (m * n))


@dataclass(frozen=True)
class RocCurve:
    """ROC points ordered from (0, 0) to (1, 1).

    ``thresholds[i]`` is the smallest score classified positive at point
    ``i``; the first point uses ``+inf``.
    """

    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray

    def area(self) -> float:
        return trapezoid_area(self.fpr, self.tpr)


def trapezoid_area(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    return float(np.sum((x[1:] - x[:-1]) * (y[1:] + y[:-1])) / 2.0)


def roc_curve(scores, labels) -> RocCurve:
    """One point per distinct score; tied scores form a single diagonal step."""
    s, y = _pair(scores, labels)
    m = int(np.sum(y == 1))
    n = y.size - m
    if m == 0 or n == 0:
        raise DegenerateLabels("ROC curve needs both classes")
    order = np.argsort(-s, kind="mergesort")
    s_sorted, y_sorted = s[order], y[order]
    tps = np.cumsum(y_sorted == 1)
    fps = np.cumsum(y_sorted == 0)
    last_of_run = np.r_[s_sorted[1:] != s_sorted[:-1], True]
    tpr = np.r_[0.0, tps[last_of_run] / m]
    fpr = np.r_[0.0, fps[last_of_run] / n]
    thr = np.r_[np.inf, s_sorted[last_of_run]]
    return RocCurve(fpr=fpr, tpr=tpr, thresholds=thr)


def nll(probs, labels) -> float:
    """Mean binary negative log-likelihood (natural log, probs clipped to [1e-12, 1-1e-12])."""
    p, y = _pair(probs, labels)
    if p.size == 0:
        raise EmptyLog("nll of empty input")
    # clip the probability of the observed class so the floor is exactly EPS
    q = np.where(y == 1, p, 1.0 - p)
    return float(-np.mean(np.log(np.clip(q, EPS, 1.0 - EPS))))


def brier(probs, labels) -> float:
    p, y = _pair(probs, labels)
    if p.size == 0:
        raise EmptyLog("brier of empty input")
    return float(np.mean((p - y) ** 2))


@dataclass(frozen=True)
class ReliabilityBins:
    """Equal-width calibration bins.

    In ``positive_prob`` mode the bins tile [0, 1] over the predicted
    probability and ``empirical`` is the positive rate. In ``max_confidence``
    mode they tile [0.5, 1] over ``max(p, 1-p)`` and ``empirical`` is the
    accuracy of the 0.5-threshold decision. Empty bins hold zeros.
    """

    lower: np.ndarray
    upper: np.ndarray
    count: np.ndarray
    mean_conf: np.ndarray
    empirical: np.ndarray
    mode: str = "positive_prob"
    n: int = field(default=0)

    def ece(self) -> float:
        if self.n == 0:
            return 0.0
        total = 0.0
        for c, e, m in zip(self.count, self.empirical, self.mean_conf):
            if c:
                total += (int(c) / self.n) * abs(float(e) - float(m))
        return total


def _bin_index(x, lo, hi, n_bins):
    idx = np.floor((x - lo) / (hi - lo) * n_bins).astype(np.int64)
    return np.clip(idx, 0, n_bins - 1)


def reliability_bins(probs, labels, n_bins=DEFAULT_ECE_BINS, mode="positive_prob") -> ReliabilityBins:
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    if mode not in ECE_MODES:
        raise ValueError(f"mode must be one of {ECE_MODES}")
    p, y = _pair(probs, labels)
    if mode == "positive_prob":
        lo, hi = 0.0, 1.0
        x = p
        target = y.astype(np.float64)
    else:
        lo, hi = 0.5, 1.0
        x = np.maximum(p, 1.0 - p)
        target = ((p >= 0.5).astype(np.int64) == y).astype(np.float64)
    edges = lo + (hi - lo) * np.arange(n_bins + 1) / n_bins
    count = np.zeros(n_bins, dtype=np.int64)
    mean_conf = np.zeros(n_bins)
    empirical = np.zeros(n_bins)
    if p.size:
        idx = _bin_index(x, lo, hi, n_bins)
        count = np.bincount(idx, minlength=n_bins)
        sum_x = np.bincount(idx, weights=x, minlength=n_bins)
        sum_t = np.bincount(idx, weights=target, minlength=n_bins)
        nz = count > 0
        mean_conf[nz] = sum_x[nz] / count[nz]
        empirical[nz] = sum_t[nz] / count[nz]
    return ReliabilityBins(
        lower=edges[:-1], upper=edges[1:], count=count,
        mean_conf=mean_conf, empirical=empirical, mode=mode, n=int(p.size),
    )


def ece(probs, labels, n_bins=DEFAULT_ECE_BINS, mode="positive_prob") -> float:
    """Expected calibration error; empty bins contribute nothing."""
    return reliability_bins(probs, labels, n_bins, mode).ece()


def score_histogram(probs, labels, n_bins=10):
    """Per-class counts over equal-width score bins on [0, 1].

    Returns ``(real_counts, fake_counts, edges)``.
    """
    if n_bins < 1:
        raise ValueError("n_bins must be >= 1")
    p, y = _pair(probs, labels)
    idx = _bin_index(p, 0.0, 1.0, n_bins)
    real = np.bincount(idx[y == 0], minlength=n_bins)
    fake = np.bincount(idx[y == 1], minlength=n_bins)
    return real, fake, np.arange(n_bins + 1) / n_bins


@dataclass(frozen=True)
class MetricReport:
    """One row of the performance/reliability table.

    ``auc`` is ``None`` when it is undefined (single-class input).
    """

    acc: float
    auc: float | None
    ece: float
    brier: float
    nll: float
    confusion: ConfusionCounts
    n: int
    threshold: float = 0.5
    ece_bins: int = DEFAULT_ECE_BINS

    @property
    def auc_defined(self) -> bool:
        return self.auc is not None

    def row(self) -> dict:
        """Values keyed by :data:`REPORT_COLUMNS`, in that order."""
        out = {
            "Acc": self.acc, "AUC": self.auc, "ECE": self.ece,
            "Brier": self.brier, "NLL": self.nll,
        }
        out.update(self.confusion.as_dict())
        return out


def ranking_scores(log: PredictionLog) -> np.ndarray:
    """Scores used for ranking metrics: ``logit / temperature`` when every record has a logit.

    This is a monotone transform of ``prob`` that cannot saturate, so strong
    scores that round to exactly 0 or 1 in probability space stay distinct.
    Logs without logits rank on ``prob``.
    """
    if all(r.logit is not None for r in log):
        return np.array([r.logit / r.temperature for r in log], dtype=np.float64)
    return log.probs()


def metric_report(log: PredictionLog, threshold=0.5, ece_bins=DEFAULT_ECE_BINS,
                  ece_mode="positive_prob") -> MetricReport:
    probs, labels = log.probs(), log.labels()
    counts = confusion(probs, labels, threshold)
    try:
        auc = roc_auc(ranking_scores(log), labels)
    except DegenerateLabels:
        auc = None
    return MetricReport(
        acc=accuracy(counts),
        auc=auc,
        ece=ece(probs, labels, ece_bins, ece_mode),
        brier=brier(probs, labels),
        nll=nll(probs, labels),
        confusion=counts,
        n=len(log),
        threshold=threshold,
        ece_bins=ece_bins,
    )

