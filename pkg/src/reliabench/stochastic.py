"""Aggregation of stochastic forward passes and ensemble members."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import EPS, PredictionLog
from .errors import EmptySamples, MisalignedMembers, MixedMcPresence

LN2 = math.log(2.0)


def binary_entropy(mu):
    """Entropy (nats) of a Bernoulli mean, with clipping; clamped to [0, ln 2]."""
    m = np.clip(np.asarray(mu, dtype=np.float64), EPS, 1.0 - EPS)
    h = -m * np.log(m) - (1.0 - m) * np.log1p(-m)
    h = np.clip(h, 0.0, LN2)
    return float(h) if h.ndim == 0 else h


def _moments(samples: np.ndarray, axis=-1):
    mean = samples.mean(axis=axis)
    var = (samples**2).mean(axis=axis) - mean**2
    # constant rows have zero spread; do not let round-off say otherwise
    var = np.where(np.ptp(samples, axis=axis) == 0, 0.0, var)
    return mean, np.maximum(var, 0.0)


@dataclass(frozen=True)
class McSummary:
    mean: float
    variance: float
    entropy: float
    T: int


def mc_aggregate(samples) -> McSummary:
    """Predictive mean, population variance and entropy of T sampled probabilities."""
    p = np.asarray(samples, dtype=np.float64).ravel()
    if p.size == 0:
        raise EmptySamples("need at least one stochastic sample")
    if np.any((p < 0) | (p > 1)):
        raise ValueError("samples must lie in [0, 1]")
    # exactly rounded sums make the summary independent of sample order
    mean = math.fsum(p) / p.size
    if p.size == 1 or p.min() == p.max():
        var = 0.0
    else:
        var = max(math.fsum(p * p) / p.size - mean * mean, 0.0)
    return McSummary(mean, var, binary_entropy(mean), int(p.size))


def mc_aggregate_matrix(samples: np.ndarray):
    """Row-wise version of :func:`mc_aggregate` for an ``n x T`` array.

    Returns ``(mean, variance, entropy)`` arrays.
    """
    s = np.asarray(samples, dtype=np.float64)
    if s.ndim != 2 or s.shape[1] == 0:
        raise EmptySamples("expected an n x T array with T >= 1")
    mean, var = _moments(s, axis=1)
    if s.shape[1] == 1:
        var = np.zeros_like(var)
    return mean, var, binary_entropy(mean)


def ensemble_mean(member_probs):
    """Per-record mean and across-member population variance.

    ``member_probs`` is ``K x n`` (one row per member, columns aligned by
    record). K = 1 is accepted and yields zero variance.
    """
    rows = [np.asarray(m, dtype=np.float64).ravel() for m in member_probs]
    if not rows:
        raise MisalignedMembers("no ensemble members")
    if len({r.size for r in rows}) != 1:
        raise MisalignedMembers("ensemble members have different lengths")
    mean, var = _moments(np.vstack(rows), axis=0)
    if len(rows) == 1:
        var = np.zeros_like(var)
    return mean, var


def ensemble_log(member_logs, name=None) -> PredictionLog:
    """Combine member logs (same ids, same order) into one MC-style log.

    The member probabilities become ``mc_probs`` so the usual summaries
    apply; ``prob`` is the member mean.
    """
    member_logs = list(member_logs)
    if not member_logs:
        raise MisalignedMembers("no ensemble members")
    ids = member_logs[0].ids()
    for lg in member_logs[1:]:
        if lg.ids() != ids:
            raise MisalignedMembers("ensemble members are not aligned by record id")
    probs = np.vstack([lg.probs() for lg in member_logs])
    mean, var = ensemble_mean(probs)
    ent = binary_entropy(mean)
    recs = []
    for j, r in enumerate(member_logs[0]):
        recs.append({
            "id": r.id, "split": r.split, "label": r.label,
            "prob": float(mean[j]), "mc_probs": probs[:, j].tolist(),
            "mc_mean": float(mean[j]), "mc_var": float(var[j]),
            "mc_entropy": float(ent[j]), "strata": dict(r.strata),
        })
    meta = dict(member_logs[0].meta)
    meta.update(mode="ensemble", K=len(member_logs))
    meta.pop("seed", None)
    if name:
        meta["model"] = name
    return PredictionLog(recs, meta)


def truncate_log(log: PredictionLog, T: int) -> PredictionLog:
    """Keep the first ``T`` MC samples of every record (prefix truncation)."""
    mat = log.mc_matrix()
    if not 1 <= T <= mat.shape[1]:
        raise ValueError(f"T must be in [1, {mat.shape[1]}]")
    recs = []
    for r, row in zip(log, mat[:, :T]):
        d = r.to_dict()
        d.pop("logit", None)
        d.pop("temperature", None)
        for k in ("prob", "mc_mean", "mc_var", "mc_entropy"):
            d.pop(k, None)
        d["mc_probs"] = row.tolist()
        recs.append(d)
    return PredictionLog(recs, {**dict(log.meta), "T": T})


def summarize_log(log: PredictionLog, T: int | None = None) -> PredictionLog:
    """Attach ``mc_mean``/``mc_var``/``mc_entropy`` and set ``prob`` to the MC mean.

    With ``T`` given, only the first ``T`` samples are used. Logits are
    dropped because the MC mean is not a sigmoid of a single logit.
    """
    if not log.has_mc:
        raise MixedMcPresence("summarize_log needs records with mc_probs")
    mat = log.mc_matrix()
    if T is not None:
        if not 1 <= T <= mat.shape[1]:
            raise ValueError(f"T must be in [1, {mat.shape[1]}]")
        mat = mat[:, :T]
    mean, var, ent = mc_aggregate_matrix(mat)
    recs = []
    for j, r in enumerate(log):
        d = r.to_dict()
        d.pop("logit", None)
        d.pop("temperature", None)
        d.update(mc_probs=mat[j].tolist(), prob=float(mean[j]), mc_mean=float(mean[j]),
                 mc_var=float(var[j]), mc_entropy=float(ent[j]))
        recs.append(d)
    return PredictionLog(recs, {**dict(log.meta), "T": int(mat.shape[1])})
