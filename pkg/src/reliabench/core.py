"""Prediction records, prediction logs and the label/score conventions.

Conventions used throughout the package:

* label 1 is the positive ("fake") class, label 0 is "real";
* the score of a record is ``prob = p(y=1 | x)``;
* hard decisions use ``prob >= threshold`` (ties go to the positive class).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Any, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import (
    BadLabel,
    EmptyLog,
    InconsistentScore,
    MissingScore,
    MixedMcPresence,
    OutOfRange,
    ValidationError,
)

SPLITS = ("train", "val", "test", "ood")

#: clip constant used by every log-based metric (never applied to storage)
EPS = 1e-12

#: tolerance for ``prob`` vs ``sigmoid(logit / temperature)``
SCORE_TOL = 1e-9


def sigmoid(z):
    """Numerically stable logistic function; works on scalars and arrays."""
    z = np.asarray(z, dtype=np.float64)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    if out.ndim == 0:
        return float(out)
    return out


def decide(prob, threshold=0.5):
    """Hard decision ``1 if prob >= threshold else 0`` (vectorised)."""
    res = np.asarray(prob) >= threshold
    if res.ndim == 0:
        return int(res)
    return res.astype(np.int64)


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn

    def as_dict(self) -> dict:
        return {"TP": self.tp, "FP": self.fp, "TN": self.tn, "FN": self.fn}


@dataclass(frozen=True)
class PredictionRecord:
    """One sample: its label, score(s), optional MC samples and strata.

    ``temperature`` is 1 for raw scores; temperature-scaled records keep the
    raw logit and store the temperature so ``prob == sigmoid(logit / T)``.
    ``mc_mean``/``mc_var``/``mc_entropy`` are attached by
    :func:`reliabench.stochastic.summarize_log`.
    """

    id: str
    label: int
    split: str = "test"
    logit: float | None = None
    prob: float | None = None
    mc_probs: tuple | None = None
    strata: Mapping[str, str] = field(default_factory=dict)
    temperature: float = 1.0
    mc_mean: float | None = None
    mc_var: float | None = None
    mc_entropy: float | None = None

    def __post_init__(self):
        if not isinstance(self.strata, MappingProxyType):
            object.__setattr__(self, "strata", MappingProxyType(dict(self.strata)))

    @property
    def has_mc(self) -> bool:
        return self.mc_probs is not None

    def to_dict(self) -> dict:
        """Plain-JSON form; absent optional fields are omitted."""
        d: dict[str, Any] = {"id": self.id, "split": self.split, "label": self.label}
        if self.logit is not None:
            d["logit"] = self.logit
        if self.prob is not None:
            d["prob"] = self.prob
        if self.mc_probs is not None:
            d["mc_probs"] = list(self.mc_probs)
        if self.temperature != 1.0:
            d["temperature"] = self.temperature
        for k in ("mc_mean", "mc_var", "mc_entropy"):
            v = getattr(self, k)
            if v is not None:
                d[k] = v
        if self.strata:
            d["strata"] = dict(self.strata)
        return d


def _as_float(raw, key, rid):
    v = raw.get(key)
    if v is None or v == "":
        return None
    try:
        v = float(v)
    except (TypeError, ValueError):
        raise ValidationError(f"{key} is not a number: {v!r}", record_id=rid) from None
    if not math.isfinite(v):
        raise OutOfRange(f"{key} is not finite", record_id=rid)
    return v


def _check_prob(p, what, rid):
    if not 0.0 <= p <= 1.0:
        raise OutOfRange(f"{what}={p!r} outside [0, 1]", record_id=rid)


def validate_record(raw: Mapping | PredictionRecord) -> PredictionRecord:
    """Check a raw record and return an immutable :class:`PredictionRecord`.

    ``prob`` is materialised eagerly: from ``sigmoid(logit / temperature)`` when
    a logit is given, otherwise from the mean of ``mc_probs``.
    """
    if isinstance(raw, PredictionRecord):
        raw = raw.to_dict()
    rid = str(raw.get("id", ""))
    if not rid:
        raise ValidationError("record id is missing or empty")

    label = raw.get("label")
    try:
        label_int = int(label)
    except (TypeError, ValueError):
        raise BadLabel(f"label {label!r} is not 0 or 1", record_id=rid) from None
    if label_int not in (0, 1) or float(label) != label_int:
        raise BadLabel(f"label {label!r} is not 0 or 1", record_id=rid)

    split = str(raw.get("split", "test"))
    if split not in SPLITS:
        raise ValidationError(f"unknown split {split!r}", record_id=rid)

    logit = _as_float(raw, "logit", rid)
    prob = _as_float(raw, "prob", rid)
    temperature = _as_float(raw, "temperature", rid)
    temperature = 1.0 if temperature is None else temperature
    if temperature <= 0:
        raise OutOfRange("temperature must be positive", record_id=rid)

    mc = raw.get("mc_probs")
    if mc is not None:
        try:
            mc = tuple(float(v) for v in mc)
        except (TypeError, ValueError):
            raise ValidationError("mc_probs must be a list of numbers", record_id=rid) from None
        if len(mc) == 0:
            raise ValidationError("mc_probs must have length >= 1", record_id=rid)
        for v in mc:
            if not math.isfinite(v):
                raise OutOfRange("mc_probs entry is not finite", record_id=rid)
            _check_prob(v, "mc_probs entry", rid)

    if logit is None and prob is None and mc is None:
        raise MissingScore("record has none of logit, prob, mc_probs", record_id=rid)
    if prob is not None:
        _check_prob(prob, "prob", rid)

    if logit is not None:
        expected = sigmoid(logit / temperature)
        if prob is None:
            prob = expected
        elif abs(prob - expected) > SCORE_TOL:
            raise InconsistentScore(
                f"prob {prob!r} != sigmoid(logit/T) = {expected!r}", record_id=rid
            )
    elif prob is None:
        prob = math.fsum(mc) / len(mc)

    extra = {}
    for key in ("mc_mean", "mc_var", "mc_entropy"):
        extra[key] = _as_float(raw, key, rid)

    strata = raw.get("strata") or {}
    if not isinstance(strata, Mapping):
        raise ValidationError("strata must be a mapping", record_id=rid)
    strata = {str(k): str(v) for k, v in strata.items()}

    return PredictionRecord(
        id=rid,
        label=label_int,
        split=split,
        logit=logit,
        prob=prob,
        mc_probs=mc,
        strata=strata,
        temperature=temperature,
        **extra,
    )


@dataclass(frozen=True)
class Columns:
    """Column-oriented view of a log, used for fast resampling.

    Optional columns are ``None`` when the log does not carry them.
    """

    ids: np.ndarray
    labels: np.ndarray
    probs: np.ndarray
    logits: np.ndarray | None = None
    mc_mean: np.ndarray | None = None
    mc_var: np.ndarray | None = None
    mc_entropy: np.ndarray | None = None

    def __len__(self):
        return len(self.labels)

    def take(self, idx) -> "Columns":
        return Columns(
            **{
                k: (None if v is None else v[idx])
                for k, v in self.__dict__.items()
            }
        )


class PredictionLog(Sequence):
    """Ordered, validated collection of records for one (model, mode, split).

    Invariants: non-empty, unique ids, and either every record carries
    ``mc_probs`` or none does.
    """

    def __init__(self, records: Iterable[PredictionRecord | Mapping], meta: Mapping | None = None):
        recs = tuple(r if isinstance(r, PredictionRecord) else validate_record(r) for r in records)
        if not recs:
            raise EmptyLog("prediction log is empty")
        seen = set()
        for r in recs:
            if r.id in seen:
                raise ValidationError(f"duplicate record id {r.id!r}", record_id=r.id)
            seen.add(r.id)
        has = {r.has_mc for r in recs}
        if len(has) > 1:
            first = next(r for r in recs if r.has_mc != recs[0].has_mc)
            raise MixedMcPresence(
                "some records carry mc_probs and others do not", record_id=first.id
            )
        self._records = recs
        self.meta = MappingProxyType(dict(meta or {}))

    def __getitem__(self, i):
        return self._records[i]

    def __len__(self):
        return len(self._records)

    def __iter__(self) -> Iterator[PredictionRecord]:
        return iter(self._records)

    def __eq__(self, other):
        if not isinstance(other, PredictionLog):
            return NotImplemented
        return self._records == other._records and dict(self.meta) == dict(other.meta)

    def __repr__(self):
        return f"PredictionLog(n={len(self)}, meta={dict(self.meta)!r})"

    @property
    def records(self) -> tuple:
        return self._records

    @property
    def has_mc(self) -> bool:
        return self._records[0].has_mc

    def with_records(self, records, **meta_updates) -> "PredictionLog":
        meta = dict(self.meta)
        meta.update(meta_updates)
        return PredictionLog(records, meta)

    def replace_records(self, fn, **meta_updates) -> "PredictionLog":
        """New log with ``fn(record)`` applied to every record (re-validated)."""
        return self.with_records([validate_record(fn(r)) for r in self._records], **meta_updates)

    def ids(self) -> list:
        return [r.id for r in self._records]

    def labels(self) -> np.ndarray:
        return np.fromiter((r.label for r in self._records), dtype=np.int64, count=len(self))

    def probs(self) -> np.ndarray:
        return np.fromiter((r.prob for r in self._records), dtype=np.float64, count=len(self))

    def logits(self) -> np.ndarray | None:
        if any(r.logit is None for r in self._records):
            return None
        return np.fromiter((r.logit for r in self._records), dtype=np.float64, count=len(self))

    def mc_matrix(self) -> np.ndarray:
        """``n x T`` array of MC samples; requires equal T across records."""
        if not self.has_mc:
            raise MixedMcPresence("log carries no mc_probs")
        lengths = {len(r.mc_probs) for r in self._records}
        if len(lengths) != 1:
            raise MixedMcPresence(f"unequal MC sample counts {sorted(lengths)}")
        return np.array([r.mc_probs for r in self._records], dtype=np.float64)

    def _optional(self, name):
        vals = [getattr(r, name) for r in self._records]
        if any(v is None for v in vals):
            return None
        return np.asarray(vals, dtype=np.float64)

    def strata_keys(self) -> set:
        keys = set()
        for r in self._records:
            keys.update(r.strata)
        return keys

    def columns(self) -> Columns:
        return Columns(
            ids=np.asarray(self.ids(), dtype=object),
            labels=self.labels(),
            probs=self.probs(),
            logits=self.logits(),
            mc_mean=self._optional("mc_mean"),
            mc_var=self._optional("mc_var"),
            mc_entropy=self._optional("mc_entropy"),
        )


def relabel(record: PredictionRecord, **changes) -> PredictionRecord:
    """``dataclasses.replace`` that re-runs validation."""
    return validate_record(replace(record, **changes))
