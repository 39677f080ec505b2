"""Uncertainty-error analysis.

Covers error-detection AUROC, entropy stratified by correctness and the
confidence-band x variance-partition sweep. The sweep works on logs that
carry ``mc_mean`` and ``mc_var`` (see :func:`reliabench.stochastic.summarize_log`).

Random streams in the sweep are keyed so that any execution order gives the
same bits:

* band ``b`` subsample: ``default_rng([seed, 0, b])``
* bootstrap of cell ``(b, p)``: ``default_rng([seed, 1, b, p])``
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .core import PredictionLog, decide
from .errors import (
    AllErrors,
    GroupTooSmall,
    InsufficientBand,
    MissingFields,
    NoErrors,
)
from .metrics import roc_auc


@dataclass(frozen=True)
class BandSpec:
    """Confidence band ``lower <= c < upper`` (``<= upper`` when ``closed``)."""

    lower: float
    upper: float
    closed: bool = False

    def __post_init__(self):
        if not 0.0 <= self.lower < self.upper <= 1.0:
            raise ValueError(f"invalid band [{self.lower}, {self.upper}]")

    @property
    def center(self) -> float:
        return (self.lower + self.upper) / 2.0

    def contains(self, conf):
        conf = np.asarray(conf, dtype=np.float64)
        upper_ok = conf <= self.upper if self.closed else conf < self.upper
        return (conf >= self.lower) & upper_ok

    def label(self) -> str:
        return f"{self.center:.2f}"


@dataclass(frozen=True)
class PartitionSpec:
    scheme: str = "median"
    q: float | None = None

    def __post_init__(self):
        if self.scheme == "median":
            if self.q is not None:
                raise ValueError("median partition takes no q")
        elif self.scheme == "top_bottom_q":
            if self.q is None or not 0.0 < self.q <= 0.5:
                raise ValueError("top_bottom_q needs q in (0, 0.5]")
        else:
            raise ValueError(f"unknown partition scheme {self.scheme!r}")

    def label(self) -> str:
        if self.scheme == "median":
            return "Median split"
        return f"Top/Bottom {round(self.q * 100):d}%"

    def group_sizes(self, n: int) -> tuple:
        """``(k_low, k_high)``: low group is the first ``k_low`` of the sorted order, high the last ``k_high``."""
        if self.scheme == "median":
            return n // 2, n - n // 2
        k = math.floor(self.q * n + 1e-9)
        return k, k


def make_bands(edges, close_last=True) -> list:
    """Disjoint bands from ``[(lo, hi), ...]``; the last one is closed by default."""
    edges = list(edges)
    out = [BandSpec(lo, hi, closed=(close_last and i == len(edges) - 1))
           for i, (lo, hi) in enumerate(edges)]
    for a, b in zip(out, out[1:]):
        if b.lower < a.upper:
            raise ValueError("bands overlap")
    return out


DEFAULT_BANDS = tuple(make_bands([(0.55, 0.65), (0.65, 0.75), (0.75, 0.85), (0.85, 0.95)]))
DEFAULT_PARTITIONS = (
    PartitionSpec("median"),
    PartitionSpec("top_bottom_q", 0.4),
    PartitionSpec("top_bottom_q", 0.3),
    PartitionSpec("top_bottom_q", 0.2),
)


def error_indicator(log_or_probs, labels=None, threshold=0.5) -> np.ndarray:
    """1 where the thresholded decision disagrees with the label."""
    if isinstance(log_or_probs, PredictionLog):
        probs, labels = log_or_probs.probs(), log_or_probs.labels()
    else:
        probs = np.asarray(log_or_probs, dtype=np.float64)
        labels = np.asarray(labels)
    return (decide(probs, threshold) != labels).astype(np.int64)


def error_auroc(uncertainty, errors) -> float:
    """AUROC of ``uncertainty`` for ranking errors (positives) above correct predictions."""
    e = np.asarray(errors).ravel()
    if e.size and np.all(e == 0):
        raise NoErrors("error-detection AUROC undefined: no errors")
    if e.size and np.all(e == 1):
        raise AllErrors("error-detection AUROC undefined: every prediction is wrong")
    return roc_auc(uncertainty, e)


@dataclass(frozen=True)
class GroupSummary:
    count: int
    mean: float | None = None
    median: float | None = None
    q1: float | None = None
    q3: float | None = None

    @property
    def defined(self) -> bool:
        return self.count > 0

    @classmethod
    def of(cls, values) -> "GroupSummary":
        v = np.asarray(values, dtype=np.float64)
        if v.size == 0:
            return cls(0)
        q1, med, q3 = np.quantile(v, [0.25, 0.5, 0.75])
        return cls(int(v.size), float(v.mean()), float(med), float(q1), float(q3))


def _require(log: PredictionLog, *names):
    cols = log.columns()
    for n in names:
        if getattr(cols, n) is None:
            raise MissingFields(f"log lacks {n}; run stochastic.summarize_log first")
    return cols


def entropy_by_correctness(log: PredictionLog, threshold=0.5) -> dict:
    """Summaries of ``mc_entropy`` for correctly and incorrectly classified records."""
    cols = _require(log, "mc_entropy")
    err = error_indicator(cols.probs, cols.labels, threshold).astype(bool)
    return {
        "correct": GroupSummary.of(cols.mc_entropy[~err]),
        "incorrect": GroupSummary.of(cols.mc_entropy[err]),
    }


def confidence_of(mc_mean, mode="mean"):
    mu = np.asarray(mc_mean, dtype=np.float64)
    if mode == "mean":
        return mu
    if mode == "symmetric":
        return np.maximum(mu, 1.0 - mu)
    raise ValueError(f"unknown confidence mode {mode!r}")


def band_population(log: PredictionLog, band: BandSpec, confidence="mean") -> np.ndarray:
    cols = _require(log, "mc_mean")
    return np.flatnonzero(band.contains(confidence_of(cols.mc_mean, confidence)))


def _choose(pop: np.ndarray, n_band: int, rng) -> np.ndarray:
    if pop.size < n_band:
        raise InsufficientBand(f"band holds {pop.size} records, {n_band} requested")
    return np.sort(rng.choice(pop, size=n_band, replace=False))


def band_select(log: PredictionLog, band: BandSpec, n_band: int, seed, confidence="mean") -> PredictionLog:
    """Uniform random subsample of exactly ``n_band`` records inside ``band``.

    ``seed`` may be an int or a sequence of ints (passed to ``default_rng``).
    The subsample keeps log order.
    """
    pop = band_population(log, band, confidence)
    idx = _choose(pop, n_band, np.random.default_rng(seed))
    return log.with_records([log[i] for i in idx], band=[band.lower, band.upper])


def _stable_order(var, ids) -> np.ndarray:
    return np.array(sorted(range(len(var)), key=lambda i: (var[i], ids[i])), dtype=np.int64)


def _group_positions(n, partition: PartitionSpec):
    k_low, k_high = partition.group_sizes(n)
    if k_low == 0 or k_high == 0:
        raise GroupTooSmall(f"{partition.label()} leaves an empty group at n={n}")
    return k_low, k_high


def variance_partition(subsample: PredictionLog, partition: PartitionSpec):
    """Split by ``mc_var`` into ``(low_group, high_group)`` logs.

    Records are stably ordered by ``(mc_var, id)``; ties therefore split by id.
    """
    cols = _require(subsample, "mc_var")
    order = _stable_order(cols.mc_var, list(cols.ids))
    k_low, k_high = _group_positions(len(order), partition)
    low = [subsample[i] for i in sorted(order[:k_low])]
    high = [subsample[i] for i in sorted(order[len(order) - k_high:])]
    return subsample.with_records(low), subsample.with_records(high)


def _error_rate(log: PredictionLog, threshold) -> float:
    cols = _require(log, "mc_mean")
    return float(np.mean(decide(cols.mc_mean, threshold) != cols.labels))


def band_effect(low_group: PredictionLog, high_group: PredictionLog, threshold=0.5) -> float:
    """``Err(high variance) - Err(low variance)`` with decisions on ``mc_mean``."""
    if len(low_group) == 0 or len(high_group) == 0:
        raise GroupTooSmall("both groups must be non-empty")
    return _error_rate(high_group, threshold) - _error_rate(low_group, threshold)


@dataclass(frozen=True)
class BandCell:
    band: BandSpec
    partition: PartitionSpec
    n_band: int
    delta_err: float = float("nan")
    ci_low: float = float("nan")
    ci_high: float = float("nan")
    significant: bool = False
    insufficient: bool = False
    reason: str = ""
    n_low: int = 0
    n_high: int = 0
    member_ids: tuple = ()

    def formatted(self, digits=3) -> str:
        if self.insufficient:
            return "insufficient"
        return (f"{self.delta_err:.{digits}f} "
                f"[{self.ci_low:.{digits}f}, {self.ci_high:.{digits}f}]")


@dataclass
class BandSweepGrid:
    cells: list
    bands: tuple
    partitions: tuple
    n_band: int
    B: int
    level: float
    seed: int
    band_members: dict = field(default_factory=dict)

    def cell(self, band_index: int, partition_index: int) -> BandCell:
        return self.cells[band_index * len(self.partitions) + partition_index]

    def column(self, partition_index: int) -> list:
        return [self.cell(b, partition_index) for b in range(len(self.bands))]

    def summary(self) -> dict:
        """Column summaries over bands plus partition sensitivity per band.

        Fractions are over evaluated (non-insufficient) cells and are ``None``
        when a column has none.
        """
        cols = []
        for p, part in enumerate(self.partitions):
            ok = [c for c in self.column(p) if not c.insufficient]
            cols.append({
                "partition": part.label(),
                "evaluated": len(ok),
                "significant_fraction": (sum(c.significant for c in ok) / len(ok)) if ok else None,
                "directional_consistency": (sum(c.delta_err > 0 for c in ok) / len(ok)) if ok else None,
            })
        ranges = []
        for b, band in enumerate(self.bands):
            vals = [self.cell(b, p).delta_err for p in range(len(self.partitions))
                    if not self.cell(b, p).insufficient]
            if vals:
                ranges.append((max(vals) - min(vals), band.center))
        if ranges:
            rmax, center = max(ranges, key=lambda t: t[0])
            sens = {"median_range": float(np.median([r for r, _ in ranges])),
                    "max_range": rmax, "max_center": center}
        else:
            sens = {"median_range": None, "max_range": None, "max_center": None}
        return {"columns": cols, "partition_sensitivity": sens}


def _bootstrap_cell(err_sorted, rank_of, k_low, k_high, B, level, rng):
    n = rank_of.size
    idx = rng.integers(0, n, size=(B, n))
    ranks = np.sort(rank_of[idx], axis=1)
    e = err_sorted[ranks]
    deltas = e[:, n - k_high:].mean(axis=1) - e[:, :k_low].mean(axis=1)
    alpha = (1.0 - level) / 2.0
    lo, hi = np.quantile(deltas, [alpha, 1.0 - alpha])
    return float(lo), float(hi)


def _run_cell(args):
    (b, p, band, part, sub, n_band, B, level, seed, threshold) = args
    if sub is None:
        return BandCell(band, part, n_band, insufficient=True, reason="insufficient band")
    mu, var, labels, ids = sub
    n = mu.size
    try:
        k_low, k_high = _group_positions(n, part)
    except GroupTooSmall as exc:
        return BandCell(band, part, n_band, insufficient=True, reason=str(exc),
                        member_ids=tuple(ids))
    order = _stable_order(var, ids)
    err = (decide(mu, threshold) != labels).astype(np.float64)
    err_sorted = err[order]
    rank_of = np.empty(n, dtype=np.int64)
    rank_of[order] = np.arange(n)
    delta = float(err_sorted[n - k_high:].mean() - err_sorted[:k_low].mean())
    rng = np.random.default_rng([seed, 1, b, p])
    lo, hi = _bootstrap_cell(err_sorted, rank_of, k_low, k_high, B, level, rng)
    return BandCell(band, part, n_band, delta_err=delta, ci_low=lo, ci_high=hi,
                    significant=lo > 0, n_low=k_low, n_high=k_high, member_ids=tuple(ids))


def band_sweep(log: PredictionLog, bands=DEFAULT_BANDS, partitions=DEFAULT_PARTITIONS,
               n_band: int | None = None, B: int = 1000, level: float = 0.95, seed: int = 0,
               confidence: str = "mean", threshold: float = 0.5, n_jobs: int = 1) -> BandSweepGrid:
    """Confidence-band x variance-partition sweep with percentile bootstrap CIs.

    Each band is subsampled once to ``n_band`` records and that subsample is
    shared by every partition column. ``n_band`` defaults to the smallest
    non-empty band population. Cells whose band is too small, or whose
    partition leaves an empty group, are marked insufficient.
    """
    bands, partitions = tuple(bands), tuple(partitions)
    cols = _require(log, "mc_mean", "mc_var")
    conf = confidence_of(cols.mc_mean, confidence)
    pops = [np.flatnonzero(bd.contains(conf)) for bd in bands]
    if n_band is None:
        sizes = [p.size for p in pops if p.size > 0]
        n_band = min(sizes) if sizes else 0
    ids = list(cols.ids)

    subs, members = [], {}
    for b, pop in enumerate(pops):
        if n_band <= 0 or pop.size < n_band:
            subs.append(None)
            continue
        idx = _choose(pop, n_band, np.random.default_rng([seed, 0, b]))
        sub_ids = [ids[i] for i in idx]
        members[b] = tuple(sub_ids)
        subs.append((cols.mc_mean[idx], cols.mc_var[idx], cols.labels[idx], sub_ids))

    jobs = [(b, p, band, part, subs[b], n_band, B, level, seed, threshold)
            for b, band in enumerate(bands) for p, part in enumerate(partitions)]
    if n_jobs and n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as ex:
            cells = list(ex.map(_run_cell, jobs))
    else:
        cells = [_run_cell(j) for j in jobs]
    return BandSweepGrid(cells=cells, bands=bands, partitions=partitions, n_band=n_band,
                         B=B, level=level, seed=seed, band_members=members)
