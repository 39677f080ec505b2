"""Table and figure emitters.

Tables are written as CSV (canonical) with a JSON mirror. Summary tables use
six decimals; figure data uses full float precision so the plotted summary
(AUC from ROC points, ECE from bins) can be recomputed from the file.
"""

from __future__ import annotations

import csv
import io
import json
import os

import numpy as np

from . import metrics
from .core import sigmoid
from .risk import BandSweepGrid, entropy_by_correctness, error_auroc, error_indicator

UNDEFINED = "undefined"


def fmt(x, digits=6) -> str:
    if x is None:
        return UNDEFINED
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        if np.isnan(x):
            return "nan"
        return f"{float(x):.{digits}f}" if digits is not None else repr(float(x))
    return str(x)


def csv_text(header, rows, digits=6) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([fmt(row.get(h), digits) for h in header])
    return buf.getvalue()


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return None if np.isnan(v) else float(v)
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def write_table(path_base, header, rows, digits=6, json_mirror=True) -> list:
    """Write ``<path_base>.csv`` (and ``.json``); returns the written paths."""
    header = list(header)
    rows = [dict(zip(header, r)) if not isinstance(r, dict) else r for r in rows]
    paths = [f"{path_base}.csv"]
    with open(paths[0], "w", encoding="utf-8", newline="") as fh:
        fh.write(csv_text(header, rows, digits))
    if json_mirror:
        paths.append(f"{path_base}.json")
        data = [{h: _jsonable(r.get(h)) for h in header} for r in rows]
        with open(paths[1], "w", encoding="utf-8") as fh:
            json.dump({"columns": header, "rows": data}, fh, indent=2, allow_nan=False)
            fh.write("\n")
    return paths


def read_table(path) -> list:
    """Rows of a CSV table as dicts of strings."""
    with open(path, encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def read_table_header(path) -> list:
    with open(path, encoding="utf-8", newline="") as fh:
        return next(csv.reader(fh))


# ---------------------------------------------------------------- tables

METRIC_HEADER = ("Method",) + metrics.REPORT_COLUMNS


def metric_rows(named_reports) -> list:
    """``[(name, MetricReport), ...]`` -> rows for :data:`METRIC_HEADER`."""
    return [{"Method": name, **rep.row()} for name, rep in named_reports]


def describe_log(meta, fallback="log") -> str:
    """Human row label for a log from its metadata."""
    mode = meta.get("mode")
    if mode == "deterministic":
        return "Deterministic"
    if mode == "temperature":
        return "TempScaling"
    if mode == "mc":
        T = meta.get("T")
        return "MC Dropout T=1" if T == 1 else f"MC Dropout T={T} mean"
    if mode == "ensemble":
        return f"Ensemble surrogate (K={meta.get('K')})"
    return meta.get("model") or fallback


def grid_rows(grid: BandSweepGrid, digits=3) -> tuple:
    """Table-5-shaped rows: band centre x partition, then summary rows."""
    header = ["Confidence band center"] + [p.label() for p in grid.partitions]
    rows = []
    for b, band in enumerate(grid.bands):
        rows.append([band.label()] + [grid.cell(b, p).formatted(digits)
                                      for p in range(len(grid.partitions))])
    summ = grid.summary()

    def pct(v):
        return UNDEFINED if v is None else f"{100 * v:.0f}%"

    rows.append(["Summary: significant configurations (%)"]
                + [pct(c["significant_fraction"]) for c in summ["columns"]])
    rows.append(["Summary: directional consistency (%)"]
                + [pct(c["directional_consistency"]) for c in summ["columns"]])
    s = summ["partition_sensitivity"]
    if s["max_range"] is None:
        sens = UNDEFINED
    else:
        sens = (f"median range across partitions = {s['median_range']:.{digits}f}, "
                f"maximum = {s['max_range']:.{digits}f} (center {s['max_center']:.2f})")
    rows.append(["Summary: sensitivity to partition"] + [sens] * len(grid.partitions))
    return header, rows


PLOT_HEADER = ("band_center", "partition", "n_band", "delta", "ci_low", "ci_high",
               "significant", "insufficient")


def grid_plot_rows(grid: BandSweepGrid) -> list:
    out = []
    for b, band in enumerate(grid.bands):
        for p, part in enumerate(grid.partitions):
            c = grid.cell(b, p)
            out.append({"band_center": round(band.center, 10), "partition": part.label(),
                        "n_band": c.n_band, "delta": c.delta_err, "ci_low": c.ci_low,
                        "ci_high": c.ci_high, "significant": c.significant,
                        "insufficient": c.insufficient})
    return out


def write_grid(grid: BandSweepGrid, path_base) -> list:
    header, rows = grid_rows(grid)
    with open(f"{path_base}.csv", "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    plot = grid_plot_rows(grid)
    paths = [f"{path_base}.csv"]
    paths += write_table(f"{path_base}_plot", PLOT_HEADER, plot, digits=None, json_mirror=False)
    summ = grid.summary()
    with open(f"{path_base}.json", "w", encoding="utf-8") as fh:
        json.dump({"n_band": grid.n_band, "B": grid.B, "level": grid.level, "seed": grid.seed,
                   "cells": [{k: _jsonable(v) for k, v in r.items()} for r in plot],
                   "summary": summ}, fh, indent=2, allow_nan=False)
        fh.write("\n")
    paths.append(f"{path_base}.json")
    return paths


# ---------------------------------------------------------------- figures

FIGURE_KINDS = ("reliability", "roc", "histogram", "entropy", "error-roc")


def _plt():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    matplotlib.rcParams["svg.hashsalt"] = "reliabench"
    matplotlib.rcParams["svg.fonttype"] = "none"
    return plt


def _save_svg(fig, path):
    fig.savefig(path, format="svg", metadata={"Date": None, "Creator": None})
    _plt().close(fig)


def reliability_figure(log, path_base, n_bins=metrics.DEFAULT_ECE_BINS, mode="positive_prob"):
    bins = metrics.reliability_bins(log.probs(), log.labels(), n_bins, mode)
    rows = [{"edge_lo": lo, "edge_hi": hi, "count": c, "mean_prob": m, "pos_rate": e}
            for lo, hi, c, m, e in zip(bins.lower, bins.upper, bins.count, bins.mean_conf,
                                       bins.empirical)]
    write_table(path_base, ("edge_lo", "edge_hi", "count", "mean_prob", "pos_rate"), rows,
                digits=None, json_mirror=False)
    plt = _plt()
    fig, ax = plt.subplots(figsize=(4, 4))
    lo = 0.0 if mode == "positive_prob" else 0.5
    ax.plot([lo, 1], [lo, 1], color="grey", lw=1, ls="--")
    occ = bins.count > 0
    ax.bar(bins.lower[occ], bins.empirical[occ], width=bins.upper[occ] - bins.lower[occ],
           align="edge", alpha=0.6, edgecolor="black")
    ax.plot(bins.mean_conf[occ], bins.empirical[occ], marker="o", color="C1")
    ax.set_xlabel("mean predicted probability")
    ax.set_ylabel("empirical positive rate" if mode == "positive_prob" else "accuracy")
    ax.set_title(f"Reliability (ECE={bins.ece():.4f})")
    _save_svg(fig, f"{path_base}.svg")
    return bins


def roc_figure(log, path_base):
    scores = metrics.ranking_scores(log)
    curve = metrics.roc_curve(scores, log.labels())
    # thresholds are reported on the probability scale
    thr = curve.thresholds
    if log.logits() is not None:
        thr = np.where(np.isinf(thr), thr, sigmoid(thr))
    rows = [{"fpr": f, "tpr": t, "threshold": th}
            for f, t, th in zip(curve.fpr, curve.tpr, thr)]
    write_table(path_base, ("fpr", "tpr", "threshold"), rows, digits=None, json_mirror=False)
    plt = _plt()
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.plot([0, 1], [0, 1], color="grey", lw=1, ls="--")
    ax.plot(curve.fpr, curve.tpr, color="C0")
    ax.set_xlabel("false positive rate")
    ax.set_ylabel("true positive rate")
    ax.set_title(f"ROC (AUC={curve.area():.4f})")
    _save_svg(fig, f"{path_base}.svg")
    return curve


def histogram_figure(log, path_base, n_bins=20):
    real, fake, edges = metrics.score_histogram(log.probs(), log.labels(), n_bins)
    rows = [{"edge_lo": edges[i], "edge_hi": edges[i + 1], "real": real[i], "fake": fake[i]}
            for i in range(n_bins)]
    write_table(path_base, ("edge_lo", "edge_hi", "real", "fake"), rows, digits=None,
                json_mirror=False)
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    w = edges[1] - edges[0]
    ax.bar(edges[:-1], real, width=w, align="edge", alpha=0.6, label="real (y=0)")
    ax.bar(edges[:-1], fake, width=w, align="edge", alpha=0.6, label="fake (y=1)")
    ax.axvline(0.5, color="black", lw=1, ls=":")
    ax.set_xlabel("s(x) = p(y=1|x)")
    ax.set_ylabel("count")
    ax.legend()
    _save_svg(fig, f"{path_base}.svg")
    return real, fake


def entropy_figure(log, path_base, threshold=0.5):
    groups = entropy_by_correctness(log, threshold)
    rows = [{"group": g, "count": s.count, "mean": s.mean, "median": s.median, "q1": s.q1,
             "q3": s.q3} for g, s in groups.items()]
    write_table(path_base, ("group", "count", "mean", "median", "q1", "q3"), rows, digits=None,
                json_mirror=False)
    cols = log.columns()
    err = error_indicator(cols.probs, cols.labels, threshold).astype(bool)
    plt = _plt()
    fig, ax = plt.subplots(figsize=(4, 3.5))
    data = [cols.mc_entropy[~err], cols.mc_entropy[err]]
    keep = [i for i, d in enumerate(data) if d.size]
    ax.boxplot([data[i] for i in keep], tick_labels=[["correct", "incorrect"][i] for i in keep])
    ax.set_ylabel("predictive entropy (nats)")
    _save_svg(fig, f"{path_base}.svg")
    return groups


def error_roc_figure(log, path_base, threshold=0.5):
    cols = log.columns()
    err = error_indicator(cols.probs, cols.labels, threshold)
    scores = {"entropy": cols.mc_entropy, "variance": cols.mc_var}
    rows, curves = [], {}
    for name, u in scores.items():
        if u is None:
            continue
        error_auroc(u, err)  # raises NoErrors/AllErrors when undefined
        curve = metrics.roc_curve(u, err)
        curves[name] = curve
        rows += [{"score": name, "fpr": f, "tpr": t, "threshold": th}
                 for f, t, th in zip(curve.fpr, curve.tpr, curve.thresholds)]
    write_table(path_base, ("score", "fpr", "tpr", "threshold"), rows, digits=None,
                json_mirror=False)
    plt = _plt()
    fig, ax = plt.subplots(figsize=(4, 4))
    ax.plot([0, 1], [0, 1], color="grey", lw=1, ls="--")
    for name, c in curves.items():
        ax.plot(c.fpr, c.tpr, label=f"{name} (AUROC={c.area():.4f})")
    ax.set_xlabel("false positive rate (correct flagged)")
    ax.set_ylabel("true positive rate (errors flagged)")
    ax.legend()
    _save_svg(fig, f"{path_base}.svg")
    return curves


def band_effect_figure(grid: BandSweepGrid, path_base):
    plt = _plt()
    fig, ax = plt.subplots(figsize=(5, 3.5))
    centers = np.array([b.center for b in grid.bands])
    for p, part in enumerate(grid.partitions):
        cells = grid.column(p)
        ok = np.array([not c.insufficient for c in cells])
        if not ok.any():
            continue
        d = np.array([c.delta_err for c in cells])[ok]
        lo = np.array([c.ci_low for c in cells])[ok]
        hi = np.array([c.ci_high for c in cells])[ok]
        off = (p - (len(grid.partitions) - 1) / 2) * 0.006
        ax.errorbar(centers[ok] + off, d, yerr=[d - lo, hi - d], marker="o", capsize=3,
                    label=part.label())
    ax.axhline(0.0, color="black", lw=1, ls=":")
    ax.set_xlabel("confidence band center")
    ax.set_ylabel("delta Err (high var - low var)")
    ax.legend(fontsize=7)
    _save_svg(fig, f"{path_base}.svg")


def ensure_dir(path):
    os.makedirs(path, exist_ok=True)
    return path
