"""Command-line interface.

Subcommands: simulate, evaluate, calibrate, sweep-bands, sweep-T,
sweep-dropout, compare, figures, protocol.

Exit codes: 0 success (including insufficient sweep cells), 2 validation
error, 3 I/O error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import warnings
from datetime import datetime, timezone

import numpy as np

from . import __version__, report
from .calibrate import BoundaryTemperature, apply_temperature, fit_temperature
from .core import PredictionLog
from .errors import DegenerateLabels, ParseError, ReliabilityError, ValidationError
from .ingest import load_log, partition_by_stratum, write_log
from .metrics import DEFAULT_ECE_BINS, metric_report, ranking_scores, roc_auc
from .risk import (
    DEFAULT_BANDS,
    DEFAULT_PARTITIONS,
    PartitionSpec,
    band_sweep,
    error_auroc,
    error_indicator,
    make_bands,
)
from .stats import bootstrap_ci, delong_test, stat_accuracy, stat_brier, stat_ece
from .stochastic import ensemble_log, summarize_log
from .toymodel import TrainConfig, ToyModel, gen_synthetic, predict_log, train

EXIT_OK, EXIT_VALIDATION, EXIT_IO = 0, 2, 3

T_VALUES = (1, 5, 10, 20, 50)
DROPOUT_GRID = (0.0, 0.1, 0.2, 0.5)

TABLE_FILES = {
    1: "table1_metrics",
    3: "table3_error_auroc",
    5: "table5_band_sweep",
    7: "table7_T_sensitivity",
    8: "table8_dropout_ablation",
    10: "table10_bootstrap",
    11: "table11_ood_metrics",
    12: "table12_delong_ood",
}
T_SENS_HEADER = ("T", "Acc", "ECE", "Brier")
DROPOUT_HEADER = ("p", "Acc", "ECE", "Brier", "mean Var")
ERROR_AUROC_HEADER = ("Uncertainty score", "Error AUROC")
BOOTSTRAP_HEADER = ("Method", "Acc_mean", "Acc_ci_low", "Acc_ci_high", "ECE_mean", "ECE_ci_low",
                    "ECE_ci_high", "Brier_mean", "Brier_ci_low", "Brier_ci_high")
DELONG_HEADER = ("Comparison", "AUC_ref", "AUC_cmp", "dAUC", "p", "Decision")
STRATA_HEADER = ("Method", "Stratum", "Value", "n", "Acc", "AUC", "ECE", "Brier", "NLL",
                 "TP", "FP", "TN", "FN")


# ---------------------------------------------------------------- helpers

def _out(args, name):
    return os.path.join(report.ensure_dir(args.out_dir), name)


def _load(path, args) -> PredictionLog:
    return load_log(path, args.format)


def _csv_floats(text):
    return [float(t) for t in text.split(",") if t.strip()]


def _parse_bands(spec):
    if not spec:
        return DEFAULT_BANDS
    pairs = []
    for part in spec.split(","):
        lo, hi = part.split(":")
        pairs.append((float(lo), float(hi)))
    return tuple(make_bands(pairs))


def _parse_partitions(spec):
    if not spec:
        return DEFAULT_PARTITIONS
    out = []
    for tok in spec.split(","):
        tok = tok.strip()
        out.append(PartitionSpec("median") if tok == "median" else PartitionSpec("top_bottom_q", float(tok)))
    return tuple(out)


def _ensure_summary(log: PredictionLog) -> PredictionLog:
    if log.has_mc and log.columns().mc_var is None:
        return summarize_log(log)
    return log


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        h.update(fh.read())
    return h.hexdigest()


def _print_json(obj):
    print(json.dumps(obj, indent=2, sort_keys=True))


def _stratified_rows(named_logs, keys, threshold, ece_bins):
    rows = []
    for name, log in named_logs:
        for key in keys:
            for value, sub in sorted(partition_by_stratum(log, key).items()):
                rep = metric_report(sub, threshold, ece_bins)
                rows.append({"Method": name, "Stratum": key, "Value": value, "n": len(sub),
                             **rep.row()})
    return rows


def _bootstrap_row(name, log, B, seed, threshold, ece_bins, level=0.95):
    row = {"Method": name}
    for col, stat in (("Acc", stat_accuracy(threshold)), ("ECE", stat_ece(ece_bins)),
                      ("Brier", stat_brier)):
        res = bootstrap_ci(stat, log, B=B, level=level, seed=seed)
        row.update({f"{col}_mean": res.mean, f"{col}_ci_low": res.ci_low,
                    f"{col}_ci_high": res.ci_high})
    return row


def _delong_row(label, ref: PredictionLog, cmp: PredictionLog, alpha=0.05, applicable=True):
    if ref.ids() != cmp.ids():
        raise ValidationError("compared logs are not aligned by record id")
    y = ref.labels()
    if not applicable:
        a = roc_auc(ranking_scores(ref), y)
        b = roc_auc(ranking_scores(cmp), y)
        return {"Comparison": label, "AUC_ref": a, "AUC_cmp": b, "dAUC": b - a, "p": None,
                "Decision": "not applicable"}
    res = delong_test(ranking_scores(ref), ranking_scores(cmp), y)
    return {"Comparison": label, "AUC_ref": res.auc_a, "AUC_cmp": res.auc_b, "dAUC": res.delta,
            "p": res.p_two_sided, "Decision": res.decision(alpha)}


def _t_rows(mc_log, t_values, threshold, ece_bins):
    rows = []
    available = len(mc_log[0].mc_probs)
    for T in t_values:
        if T > available:
            warnings.warn(f"T={T} exceeds the {available} stored samples; skipped")
            continue
        rep = metric_report(summarize_log(mc_log, T=T), threshold, ece_bins)
        rows.append({"T": T, "Acc": rep.acc, "ECE": rep.ece, "Brier": rep.brier})
    return rows


def _dropout_row(p, mc_log, threshold, ece_bins):
    s = _ensure_summary(mc_log)
    rep = metric_report(s, threshold, ece_bins)
    return {"p": p, "Acc": rep.acc, "ECE": rep.ece, "Brier": rep.brier,
            "mean Var": float(np.mean(s.columns().mc_var))}


# ---------------------------------------------------------------- commands

def cmd_simulate(args):
    ds = gen_synthetic(args.n, seed=args.seed, overlap=args.overlap, ood_shift=args.ood_shift)
    cfg = TrainConfig(seed=args.seed, dropout_p=args.dropout_p)
    result = train(ds, cfg)
    written = {}
    with open(_out(args, "dataset_manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(ds.manifest(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    with open(_out(args, "model.json"), "w", encoding="utf-8") as fh:
        json.dump({"config": cfg.to_dict(), "best_epoch": result.best_epoch,
                   "model": result.model.to_dict()}, fh, indent=2, sort_keys=True)
        fh.write("\n")

    def emit(name, log):
        path = _out(args, f"{name}.jsonl")
        write_log(log, path, "jsonl")
        written[name] = path

    members = [result.model]
    if args.k > 1:
        members += [train(ds, TrainConfig(**{**cfg.to_dict(), "seed": args.seed + i})).model
                    for i in range(1, args.k)]
    for split in ("val", "test", "ood"):
        emit(f"det_{split}", predict_log(result.model, ds, split, "deterministic", seed=args.seed))
    for split in ("test", "ood"):
        emit(f"mc_T{args.t}_{split}",
             predict_log(result.model, ds, split, "mc", T=args.t, seed=args.seed))
        if args.k > 1:
            emit(f"ensemble_K{args.k}_{split}",
                 ensemble_log([predict_log(m, ds, split, "ensemble-member") for m in members]))
    for p in _csv_floats(args.ablation_p):
        emit(f"mc_T{args.t}_p{p:g}_test",
             predict_log(result.model, ds, "test", "mc", T=args.t, dropout_p=p, seed=args.seed))
    _print_json({"out_dir": args.out_dir, "logs": written})
    return EXIT_OK


def cmd_evaluate(args):
    named = []
    for path in args.logs:
        log = _ensure_summary(_load(path, args))
        stem = os.path.splitext(os.path.basename(path))[0]
        named.append((report.describe_log(log.meta, stem) if not args.label_by_file else stem, log))
    rows = report.metric_rows((n, metric_report(lg, args.threshold, args.ece_bins)) for n, lg in named)
    paths = report.write_table(_out(args, args.name), report.METRIC_HEADER, rows)
    if args.stratify:
        srows = _stratified_rows(named, args.stratify, args.threshold, args.ece_bins)
        paths += report.write_table(_out(args, f"{args.name}_strata"), STRATA_HEADER, srows)
    _print_json({"written": paths})
    return EXIT_OK


def cmd_calibrate(args):
    val = _load(args.val, args)
    target = _load(args.apply, args)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", BoundaryTemperature)
        temp = fit_temperature(val)
    out = apply_temperature(target, temp)
    write_log(out, args.out, "jsonl" if not args.out.endswith(".csv") else "csv")
    before = metric_report(target, args.threshold, args.ece_bins).row()
    after = metric_report(out, args.threshold, args.ece_bins).row()
    _print_json({"temperature": temp.to_dict(), "boundary_warning": bool(caught),
                 "before": before, "after": after, "out": args.out})
    return EXIT_OK


def cmd_sweep_bands(args):
    log = _ensure_summary(_load(args.log, args))
    grid = band_sweep(log, bands=_parse_bands(args.bands), partitions=_parse_partitions(args.partitions),
                      n_band=args.n_band, B=args.B, level=args.level, seed=args.seed,
                      confidence=args.confidence, threshold=args.threshold, n_jobs=args.jobs)
    base = _out(args, args.name)
    paths = report.write_grid(grid, base)
    if args.svg:
        report.band_effect_figure(grid, base + "_effect")
        paths.append(base + "_effect.svg")
    _print_json({"written": paths, "n_band": grid.n_band})
    return EXIT_OK


def cmd_sweep_t(args):
    log = _load(args.log, args)
    t_values = [int(t) for t in _csv_floats(args.t_values)]
    rows = _t_rows(log, t_values, args.threshold, args.ece_bins)
    _print_json({"written": report.write_table(_out(args, args.name), T_SENS_HEADER, rows)})
    return EXIT_OK


def cmd_sweep_dropout(args):
    rows = []
    for path in args.logs:
        log = _load(path, args)
        if "dropout_p" not in log.meta:
            raise ValidationError(f"{path}: log metadata lacks dropout_p")
        rows.append(_dropout_row(float(log.meta["dropout_p"]), log, args.threshold, args.ece_bins))
    rows.sort(key=lambda r: r["p"])
    _print_json({"written": report.write_table(_out(args, args.name), DROPOUT_HEADER, rows)})
    return EXIT_OK


def cmd_compare(args):
    a, b = _load(args.a, args), _load(args.b, args)
    if a.ids() != b.ids():
        raise ValidationError("logs --a and --b are not aligned by record id")
    src = a if args.labels_from == "a" else b
    other = b if args.labels_from == "a" else a
    if not np.array_equal(src.labels(), other.labels()):
        warnings.warn(f"label mismatch between logs; using labels from {args.labels_from}")
    y = src.labels()
    temp_row = "temperature" in (a.meta.get("mode"), b.meta.get("mode"))
    out = {"AUC_ref": roc_auc(ranking_scores(a), y), "AUC_cmp": roc_auc(ranking_scores(b), y)}
    out["dAUC"] = out["AUC_cmp"] - out["AUC_ref"]
    if temp_row and not args.force:
        out.update(p=None, decision="not applicable")
    else:
        res = delong_test(ranking_scores(a), ranking_scores(b), y)
        out.update(p=res.p_two_sided, decision=res.decision(args.alpha), z=res.z,
                   variance_of_delta=res.variance_of_delta, degenerate=res.degenerate)
    with open(_out(args, args.name + ".json"), "w", encoding="utf-8") as fh:
        json.dump(out, fh, indent=2, sort_keys=True)
        fh.write("\n")
    _print_json(out)
    return EXIT_OK


def _figures(log, kinds, base_dir, prefix, threshold, ece_bins, hist_bins=20):
    written = []
    for kind in kinds:
        base = os.path.join(base_dir, f"{prefix}{kind}")
        if kind == "reliability":
            report.reliability_figure(log, base, ece_bins)
        elif kind == "roc":
            report.roc_figure(log, base)
        elif kind == "histogram":
            report.histogram_figure(log, base, hist_bins)
        elif kind == "entropy":
            report.entropy_figure(log, base, threshold)
        elif kind == "error-roc":
            report.error_roc_figure(log, base, threshold)
        else:
            raise ValueError(f"unknown figure kind {kind!r}")
        written += [base + ".csv", base + ".svg"]
    return written


def cmd_figures(args):
    log = _ensure_summary(_load(args.log, args))
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    written = _figures(log, kinds, report.ensure_dir(args.out_dir), args.prefix, args.threshold,
                       args.ece_bins, args.hist_bins)
    _print_json({"written": written})
    return EXIT_OK


# ---------------------------------------------------------------- protocol

DEFAULT_PROTOCOL = {
    "n": 4000,
    "overlap": 0.5,
    "ood_shift": 0.75,
    "seed": 42,
    "K": 5,
    "T": 20,
    "T_values": list(T_VALUES),
    "dropout_grid": list(DROPOUT_GRID),
    "threshold": 0.5,
    "ece_bins": DEFAULT_ECE_BINS,
    "B": 1000,
    "level": 0.95,
    "n_band": None,
    "alpha": 0.05,
    "train": {},
}


def run_protocol(config: dict, out_dir: str, command="protocol") -> dict:
    """Simulate, train, predict under every inference mode and write all tables.

    Returns the manifest dictionary (also written to ``manifest.json``).
    """
    cfg = {**DEFAULT_PROTOCOL, **config}
    seed, thr, bins = cfg["seed"], cfg["threshold"], cfg["ece_bins"]
    t_max = max(cfg["T"], max(cfg["T_values"]))
    report.ensure_dir(out_dir)
    logs_dir = report.ensure_dir(os.path.join(out_dir, "logs"))
    fig_dir = report.ensure_dir(os.path.join(out_dir, "figures"))
    stage = "simulate"
    try:
        ds = gen_synthetic(cfg["n"], seed=seed, overlap=cfg["overlap"], ood_shift=cfg["ood_shift"])
        stage = "train"
        tcfg = TrainConfig(**{"seed": seed, **cfg["train"]})
        result = train(ds, tcfg)
        model = result.model
        members = [model] + [train(ds, TrainConfig(**{**tcfg.to_dict(), "seed": seed + i})).model
                             for i in range(1, cfg["K"])]

        stage = "predict"
        det = {s: predict_log(model, ds, s, "deterministic", seed=seed) for s in ("val", "test", "ood")}
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryTemperature)
            temp = fit_temperature(det["val"])
        logs = {}
        for s in ("test", "ood"):
            mc_full = predict_log(model, ds, s, "mc", T=t_max, seed=seed)
            logs[s] = {
                "Deterministic": det[s],
                "TempScaling": apply_temperature(det[s], temp),
                "MC Dropout T=1": summarize_log(mc_full, T=1),
                f"MC Dropout T={cfg['T']} mean": summarize_log(mc_full, T=cfg["T"]),
                f"Ensemble surrogate (K={cfg['K']})": ensemble_log(
                    [predict_log(m, ds, s, "ensemble-member") for m in members]),
                "_mc_full": mc_full,
            }
        digests = {}
        for s, group in logs.items():
            for name, lg in group.items():
                fname = name.strip("_").replace(" ", "_").replace("=", "").replace("(", "").replace(")", "")
                path = os.path.join(logs_dir, f"{s}_{fname}.jsonl")
                write_log(lg, path, "jsonl")
                digests[os.path.relpath(path, out_dir)] = _sha256(path)
        methods = [k for k in logs["test"] if not k.startswith("_")]
        mc_name = f"MC Dropout T={cfg['T']} mean"
        ens_name = f"Ensemble surrogate (K={cfg['K']})"

        stage = "evaluate"
        reports = [(m, metric_report(logs["test"][m], thr, bins)) for m in methods]
        report.write_table(os.path.join(out_dir, TABLE_FILES[1]), report.METRIC_HEADER,
                           report.metric_rows(reports))
        ood_reports = [(m, metric_report(logs["ood"][m], thr, bins)) for m in methods]
        report.write_table(os.path.join(out_dir, TABLE_FILES[11]), report.METRIC_HEADER,
                           report.metric_rows(ood_reports))
        strata_named = [(m, logs["test"][m]) for m in ("Deterministic", "TempScaling", mc_name)]
        report.write_table(os.path.join(out_dir, "table_generator_strata"), STRATA_HEADER,
                           _stratified_rows(strata_named, ["generator"], thr, bins))

        stage = "error-auroc"
        mc_cols = logs["test"][mc_name].columns()
        ens_cols = logs["test"][ens_name].columns()
        e_mc = error_indicator(mc_cols.probs, mc_cols.labels, thr)
        e_ens = error_indicator(ens_cols.probs, ens_cols.labels, thr)

        def safe(u, e):
            try:
                return error_auroc(u, e)
            except DegenerateLabels:
                return None

        rows3 = [
            {"Uncertainty score": f"entropy_T{cfg['T']}", "Error AUROC": safe(mc_cols.mc_entropy, e_mc)},
            {"Uncertainty score": f"variance_T{cfg['T']}", "Error AUROC": safe(mc_cols.mc_var, e_mc)},
            {"Uncertainty score": "variance_ensemble_surrogate", "Error AUROC": safe(ens_cols.mc_var, e_ens)},
        ]
        report.write_table(os.path.join(out_dir, TABLE_FILES[3]), ERROR_AUROC_HEADER, rows3)

        stage = "band-sweep"
        grid = band_sweep(logs["test"][mc_name], n_band=cfg["n_band"], B=cfg["B"],
                          level=cfg["level"], seed=seed, threshold=thr)
        report.write_grid(grid, os.path.join(out_dir, TABLE_FILES[5]))
        report.band_effect_figure(grid, os.path.join(fig_dir, "band_effect"))

        stage = "sweep-T"
        report.write_table(os.path.join(out_dir, TABLE_FILES[7]), T_SENS_HEADER,
                           _t_rows(logs["test"]["_mc_full"], cfg["T_values"], thr, bins))

        stage = "sweep-dropout"
        rows8 = [_dropout_row(p, predict_log(model, ds, "test", "mc", T=cfg["T"], dropout_p=p,
                                             seed=seed), thr, bins)
                 for p in cfg["dropout_grid"]]
        report.write_table(os.path.join(out_dir, TABLE_FILES[8]), DROPOUT_HEADER, rows8)

        stage = "bootstrap"
        rows10 = [_bootstrap_row(m, logs["test"][m], cfg["B"], seed, thr, bins, cfg["level"])
                  for m in methods]
        report.write_table(os.path.join(out_dir, TABLE_FILES[10]), BOOTSTRAP_HEADER, rows10)

        stage = "delong"
        ood = logs["ood"]
        rows12 = [
            _delong_row("MC Dropout T=1 vs Det", ood["Deterministic"], ood["MC Dropout T=1"], cfg["alpha"]),
            _delong_row(f"MC Dropout T={cfg['T']} (mean) vs Det", ood["Deterministic"], ood[mc_name],
                        cfg["alpha"]),
            _delong_row(f"Ensemble (K={cfg['K']}) vs Det", ood["Deterministic"], ood[ens_name], cfg["alpha"]),
            _delong_row("Temp Scaling vs Det", ood["Deterministic"], ood["TempScaling"], applicable=False),
        ]
        report.write_table(os.path.join(out_dir, TABLE_FILES[12]), DELONG_HEADER, rows12)

        stage = "figures"
        t = logs["test"]
        _figures(t["Deterministic"], ["reliability", "roc", "histogram"], fig_dir, "det_", thr, bins)
        _figures(t["TempScaling"], ["reliability"], fig_dir, "temp_", thr, bins)
        _figures(t[mc_name], ["reliability", "entropy", "error-roc"], fig_dir, "mc_", thr, bins)
        _figures(t[ens_name], ["error-roc"], fig_dir, "ensemble_", thr, bins)
        with open(os.path.join(out_dir, "training_trace.csv"), "w", encoding="utf-8") as fh:
            fh.write(report.csv_text(("epoch", "train_loss", "val_nll"),
                                     [vars(r) for r in result.trace], digits=None))
        with open(os.path.join(out_dir, "calibration.json"), "w", encoding="utf-8") as fh:
            json.dump(temp.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    except ReliabilityError as exc:
        raise ReliabilityError(f"protocol stage {stage!r} failed: {exc}") from exc

    manifest = {
        "command": command,
        "config": cfg,
        "seeds": {"data": seed, "train": tcfg.seed,
                  "ensemble": [seed + i for i in range(cfg["K"])], "mc": seed, "bootstrap": seed},
        "train_config": tcfg.to_dict(),
        "model": {"best_epoch": result.best_epoch, "epochs_run": result.epochs_run},
        "temperature": temp.to_dict(),
        "dataset": ds.manifest(),
        "log_digests": digests,
        "tables": {str(k): v + ".csv" for k, v in TABLE_FILES.items()},
        "tool_version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
    }
    with open(os.path.join(out_dir, "manifest.json"), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return manifest


def cmd_protocol(args):
    config = {}
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            config = json.load(fh)
    if args.seed_given:
        config["seed"] = args.seed
    manifest = run_protocol(config, args.out_dir)
    _print_json({"out_dir": args.out_dir, "tables": manifest["tables"]})
    return EXIT_OK


# ---------------------------------------------------------------- parser

class _SeedAction(argparse.Action):
    def __call__(self, parser, namespace, values, option_string=None):
        setattr(namespace, self.dest, values)
        namespace.seed_given = True


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=42, action=_SeedAction)
    common.add_argument("--format", choices=("jsonl", "csv"), default=None,
                        help="input log format (default: by file extension)")
    common.add_argument("--out-dir", default=".")
    common.add_argument("--threshold", type=float, default=0.5)
    common.add_argument("--ece-bins", type=int, default=DEFAULT_ECE_BINS)
    common.set_defaults(seed_given=False)

    p = argparse.ArgumentParser(prog="reliabench", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", parents=[common], help="toy data + model + prediction logs")
    s.add_argument("--n", type=int, default=4000)
    s.add_argument("--overlap", type=float, default=0.5)
    s.add_argument("--ood-shift", type=float, default=0.75)
    s.add_argument("--k", type=int, default=5)
    s.add_argument("--t", type=int, default=20)
    s.add_argument("--dropout-p", type=float, default=0.2)
    s.add_argument("--ablation-p", default=",".join(str(x) for x in DROPOUT_GRID))
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("evaluate", parents=[common], help="metric table for one or more logs")
    s.add_argument("logs", nargs="+")
    s.add_argument("--stratify", action="append", default=[], metavar="KEY")
    s.add_argument("--name", default="metrics")
    s.add_argument("--label-by-file", action="store_true")
    s.set_defaults(func=cmd_evaluate)

    s = sub.add_parser("calibrate", parents=[common], help="fit temperature on --val, apply to --apply")
    s.add_argument("--val", required=True)
    s.add_argument("--apply", required=True)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("sweep-bands", parents=[common], help="confidence-band x variance-partition grid")
    s.add_argument("log")
    s.add_argument("--bands", default=None, help="e.g. 0.55:0.65,0.85:0.95")
    s.add_argument("--partitions", default=None, help="e.g. median,0.4,0.3,0.2")
    s.add_argument("--n-band", type=int, default=None)
    s.add_argument("--B", type=int, default=1000)
    s.add_argument("--level", type=float, default=0.95)
    s.add_argument("--confidence", choices=("mean", "symmetric"), default="mean")
    s.add_argument("--jobs", type=int, default=1)
    s.add_argument("--name", default="band_sweep")
    s.add_argument("--svg", action="store_true")
    s.set_defaults(func=cmd_sweep_bands)

    s = sub.add_parser("sweep-T", parents=[common], help="metrics vs number of MC samples")
    s.add_argument("log")
    s.add_argument("--t-values", default=",".join(str(t) for t in T_VALUES))
    s.add_argument("--name", default="t_sensitivity")
    s.set_defaults(func=cmd_sweep_t)

    s = sub.add_parser("sweep-dropout", parents=[common], help="tabulate MC logs over dropout rate")
    s.add_argument("logs", nargs="+")
    s.add_argument("--name", default="dropout_ablation")
    s.set_defaults(func=cmd_sweep_dropout)

    s = sub.add_parser("compare", parents=[common], help="paired DeLong test of two logs")
    s.add_argument("--a", required=True, help="reference log")
    s.add_argument("--b", required=True, help="comparison log")
    s.add_argument("--labels-from", choices=("a", "b"), default="a")
    s.add_argument("--alpha", type=float, default=0.05)
    s.add_argument("--force", action="store_true", help="run DeLong even for temperature-scaled logs")
    s.add_argument("--name", default="compare")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("figures", parents=[common], help="figure data CSV + SVG")
    s.add_argument("log")
    s.add_argument("--kinds", default=",".join(report.FIGURE_KINDS))
    s.add_argument("--prefix", default="fig_")
    s.add_argument("--hist-bins", type=int, default=20)
    s.set_defaults(func=cmd_figures)

    s = sub.add_parser("protocol", parents=[common], help="full end-to-end run")
    s.add_argument("--config", default=None, help="JSON file overriding protocol defaults")
    s.set_defaults(func=cmd_protocol)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValidationError, ParseError) as exc:
        rid = getattr(exc, "record_id", None)
        line = getattr(exc, "line", None)
        where = "".join([f" id={rid}" if rid else "", f" line={line}" if line else ""])
        print(f"validation error:{where} {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ReliabilityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
