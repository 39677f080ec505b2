"""Reading/writing prediction logs, metadata keyword filtering, stratification.

JSONL is the canonical format: one record per line, UTF-8. An optional first
line ``{"_meta": {...}}`` carries the log metadata (model, mode, seed, T, ...).
CSV is flat: ``id,split,label,logit,prob,strata.<key>...`` (plus ``temperature``
for scaled logs) and cannot hold MC sample vectors.
"""

from __future__ import annotations

import csv
import io
import json
import os
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .core import PredictionLog, validate_record
from .errors import (
    EmptyLog,
    MixedMcPresence,
    ParseError,
    UnknownStratumKey,
    ValidationError,
)

#: keyword list used to select politically salient samples from metadata
POLITICAL_KEYWORDS = (
    "president", "prime minister",
    "election", "campaign", "senator",
    "congress", "parliament",
    "press conference", "speech", "rally",
    "biden", "trump", "harris",
    "trudeau", "sunak", "macron",
    "putin", "zelensky",
)

CSV_BASE_COLUMNS = ("id", "split", "label", "logit", "prob")


def _detect_format(path, fmt):
    if fmt is not None:
        return fmt
    ext = os.path.splitext(str(path))[1].lower()
    return "csv" if ext == ".csv" else "jsonl"


def _validated(raw, line):
    try:
        return validate_record(raw)
    except ValidationError as exc:
        exc.line = line
        if exc.record_id is None:
            exc.record_id = raw.get("id") if isinstance(raw, Mapping) else None
        raise


def _build_log(records, meta, lines):
    try:
        return PredictionLog(records, meta)
    except MixedMcPresence as exc:
        exc.line = lines.get(exc.record_id)
        raise
    except ValidationError as exc:
        exc.line = lines.get(exc.record_id)
        raise


def parse_jsonl(text: str) -> PredictionLog:
    records, lines, meta = [], {}, {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON ({exc.msg})", line=lineno) from None
        if not isinstance(obj, dict):
            raise ParseError("each line must be a JSON object", line=lineno)
        if "_meta" in obj and not records:
            meta = dict(obj["_meta"])
            continue
        rec = _validated(obj, lineno)
        lines.setdefault(rec.id, lineno)
        records.append(rec)
    if not records:
        raise EmptyLog("no records found")
    return _build_log(records, meta, lines)


def parse_csv(text: str) -> PredictionLog:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise EmptyLog("empty CSV")
    missing = {"id", "label"} - set(reader.fieldnames)
    if missing:
        raise ParseError(f"missing required columns {sorted(missing)}", line=1)
    if "mc_probs" in reader.fieldnames:
        raise ParseError("CSV logs cannot carry mc_probs; use JSONL", line=1)
    records, lines = [], {}
    for row in reader:
        lineno = reader.line_num
        if None in row:
            raise ParseError("row has more fields than the header", line=lineno)
        raw = {k: v for k, v in row.items() if not k.startswith("strata.")}
        raw["strata"] = {
            k[len("strata."):]: v for k, v in row.items() if k.startswith("strata.") and v != ""
        }
        rec = _validated(raw, lineno)
        lines.setdefault(rec.id, lineno)
        records.append(rec)
    if not records:
        raise EmptyLog("no records found")
    return _build_log(records, {}, lines)


def load_log(path, format: str | None = None) -> PredictionLog:
    """Load a prediction log from ``path`` (``format`` in {"jsonl", "csv"}).

    The format defaults to the file extension (``.csv`` or anything else
    treated as JSONL).
    """
    fmt = _detect_format(path, format)
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    if fmt == "jsonl":
        return parse_jsonl(text)
    if fmt == "csv":
        return parse_csv(text)
    raise ValueError(f"unknown format {fmt!r}")


def dumps_jsonl(log: PredictionLog) -> str:
    out = []
    if log.meta:
        out.append(json.dumps({"_meta": dict(log.meta)}, sort_keys=True))
    out.extend(json.dumps(r.to_dict()) for r in log)
    return "\n".join(out) + "\n"


def dumps_csv(log: PredictionLog) -> str:
    if log.has_mc:
        raise ValueError("CSV cannot hold mc_probs; write JSONL instead")
    keys = sorted(log.strata_keys())
    # temperature-scaled logs keep raw logits, so the scale must travel with them
    scaled = any(r.temperature != 1.0 for r in log)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(list(CSV_BASE_COLUMNS) + (["temperature"] if scaled else [])
                    + [f"strata.{k}" for k in keys])
    for r in log:
        row = [r.id, r.split, r.label,
               "" if r.logit is None else repr(r.logit),
               "" if r.prob is None else repr(r.prob)]
        if scaled:
            row.append(repr(r.temperature))
        row += [r.strata.get(k, "") for k in keys]
        writer.writerow(row)
    return buf.getvalue()


def write_log(log: PredictionLog, path, format: str | None = None) -> None:
    fmt = _detect_format(path, format)
    text = dumps_jsonl(log) if fmt == "jsonl" else dumps_csv(log)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


@dataclass(frozen=True)
class MetadataRecord:
    id: str
    fields: Mapping[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.id:
            raise ValueError("metadata record id must be non-empty")


def keyword_filter(records: Iterable[MetadataRecord], keywords=POLITICAL_KEYWORDS) -> list:
    """Keep records where any metadata value contains any keyword.

    Matching is case-insensitive substring matching, so "rally" also hits
    "Rallying". Only metadata is consulted. Input order is preserved.
    """
    kws = [k.lower() for k in keywords]
    if not kws:
        raise ValueError("keywords must be non-empty")
    kept = []
    for rec in records:
        values = [str(v).lower() for v in rec.fields.values()]
        if any(k in v for v in values for k in kws):
            kept.append(rec)
    return kept


def load_metadata_csv(path) -> list:
    """Read a metadata CSV with an ``id`` column; other columns become fields."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        return [
            MetadataRecord(row["id"], {k: v for k, v in row.items() if k != "id" and v is not None})
            for row in reader
        ]


def partition_by_stratum(log: PredictionLog, key: str) -> dict:
    """Split ``log`` by the value of strata ``key``.

    Returns ``{value: sub_log}`` in first-appearance order. Records lacking
    the key land under ``""``. Sub-log sizes always sum to ``len(log)``.
    """
    if key == "split":
        getter = lambda r: r.split  # noqa: E731
    elif key in log.strata_keys():
        getter = lambda r: r.strata.get(key, "")  # noqa: E731
    else:
        raise UnknownStratumKey(f"stratum key {key!r} not present in log")
    groups: dict[str, list] = {}
    for r in log:
        groups.setdefault(getter(r), []).append(r)
    return {v: log.with_records(rs, stratum=f"{key}={v}") for v, rs in groups.items()}


def stratum_sizes(parts: Mapping[str, PredictionLog]) -> dict:
    return {k: len(v) for k, v in parts.items()}
