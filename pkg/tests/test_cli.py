import json
import subprocess
import sys

import numpy as np
import pytest

from reliabench import cli, report
from reliabench.ingest import load_log
from reliabench.metrics import REPORT_COLUMNS, metric_report, trapezoid_area
from reliabench.stochastic import summarize_log


def run(*argv):
    return cli.main([str(a) for a in argv])


@pytest.fixture(scope="module")
def sim(tmp_path_factory):
    out = tmp_path_factory.mktemp("sim")
    code = run("simulate", "--n", 800, "--k", 2, "--t", 10, "--seed", 7, "--out-dir", out,
               "--ablation-p", "0,0.5")
    assert code == 0
    return out


class TestSimulate:
    def test_outputs(self, sim):
        names = {p.name for p in sim.iterdir()}
        assert {"dataset_manifest.json", "model.json", "det_val.jsonl", "det_test.jsonl",
                "mc_T10_test.jsonl", "ensemble_K2_ood.jsonl", "mc_T10_p0.5_test.jsonl"} <= names
        manifest = json.loads((sim / "dataset_manifest.json").read_text())
        assert manifest["params"]["n"] == 800

    def test_logs_load(self, sim):
        log = load_log(sim / "mc_T10_test.jsonl")
        assert log.has_mc and len(log[0].mc_probs) == 10


class TestEvaluate:
    def test_table_schema_and_determinism(self, sim, tmp_path):
        args = ("evaluate", sim / "det_test.jsonl", sim / "mc_T10_test.jsonl", "--out-dir", tmp_path)
        assert run(*args) == 0
        first = (tmp_path / "metrics.csv").read_bytes()
        assert run(*args) == 0
        assert (tmp_path / "metrics.csv").read_bytes() == first
        rows = report.read_table(tmp_path / "metrics.csv")
        assert report.read_table_header(tmp_path / "metrics.csv") == ["Method", *REPORT_COLUMNS]
        assert [r["Method"] for r in rows] == ["Deterministic", "MC Dropout T=10 mean"]
        for r in rows:
            n = sum(int(r[k]) for k in ("TP", "FP", "TN", "FN"))
            assert n == len(load_log(sim / "det_test.jsonl"))
        data = json.loads((tmp_path / "metrics.json").read_text())
        assert data["columns"] == ["Method", *REPORT_COLUMNS]

    def test_stratify_generator(self, sim, tmp_path):
        assert run("evaluate", sim / "det_test.jsonl", "--stratify", "generator", "--out-dir", tmp_path) == 0
        rows = report.read_table(tmp_path / "metrics_strata.csv")
        assert {r["Value"] for r in rows} == {"A", "B", "C", "D"}
        assert sum(int(r["n"]) for r in rows) == len(load_log(sim / "det_test.jsonl"))

    def test_stratify_split_over_combined_log(self, sim, tmp_path):
        test, ood = load_log(sim / "det_test.jsonl"), load_log(sim / "det_ood.jsonl")
        both = tmp_path / "both.jsonl"
        both.write_text("\n".join(json.dumps(r.to_dict()) for r in (*test, *ood)) + "\n")
        assert run("evaluate", both, "--stratify", "split", "--out-dir", tmp_path) == 0
        rows = report.read_table(tmp_path / "metrics_strata.csv")
        assert {r["Value"]: int(r["n"]) for r in rows} == {"test": len(test), "ood": len(ood)}

    def test_validation_error_exit_code(self, tmp_path, capsys):
        bad = tmp_path / "bad.jsonl"
        bad.write_text('{"id": "ok", "label": 1, "prob": 0.4}\n{"id": "broken-7", "label": 3, "prob": 0.4}\n')
        assert run("evaluate", bad, "--out-dir", tmp_path) == 2
        assert "broken-7" in capsys.readouterr().err

    def test_io_error_exit_code(self, tmp_path, capsys):
        assert run("evaluate", tmp_path / "missing.jsonl", "--out-dir", tmp_path) == 3
        assert "missing.jsonl" in capsys.readouterr().err


class TestCalibrate:
    def test_fit_and_apply(self, sim, tmp_path, capsys):
        out = tmp_path / "temp.jsonl"
        assert run("calibrate", "--val", sim / "det_val.jsonl", "--apply", sim / "det_test.jsonl",
                   "--out", out) == 0
        echoed = json.loads(capsys.readouterr().out)
        tau = echoed["temperature"]["tau"]
        scaled = load_log(out)
        assert scaled.meta["temperature"] == tau
        assert echoed["before"]["TP"] == echoed["after"]["TP"]
        assert echoed["before"]["AUC"] == echoed["after"]["AUC"]


class TestSweeps:
    def test_bands_default_grid(self, sim, tmp_path):
        assert run("sweep-bands", sim / "mc_T10_test.jsonl", "--B", 100, "--out-dir", tmp_path, "--svg") == 0
        rows = (tmp_path / "band_sweep.csv").read_text().splitlines()
        assert rows[0].split(",")[0] == "Confidence band center"
        assert len(rows) == 1 + 4 + 3
        plot = report.read_table(tmp_path / "band_sweep_plot.csv")
        assert len(plot) == 16
        assert (tmp_path / "band_sweep_effect.svg").exists()

    def test_single_band(self, sim, tmp_path):
        assert run("sweep-bands", sim / "mc_T10_test.jsonl", "--bands", "0.85:0.95", "--B", 50,
                   "--out-dir", tmp_path) == 0
        assert len(report.read_table(tmp_path / "band_sweep_plot.csv")) == 4

    def test_insufficient_cells_exit_zero(self, sim, tmp_path):
        assert run("sweep-bands", sim / "mc_T10_test.jsonl", "--n-band", 100000, "--B", 10,
                   "--out-dir", tmp_path) == 0
        plot = report.read_table(tmp_path / "band_sweep_plot.csv")
        assert all(r["insufficient"] == "true" for r in plot)

    def test_sweep_t(self, sim, tmp_path):
        assert run("sweep-T", sim / "mc_T10_test.jsonl", "--t-values", "1,5,10", "--out-dir", tmp_path) == 0
        rows = report.read_table(tmp_path / "t_sensitivity.csv")
        assert [r["T"] for r in rows] == ["1", "5", "10"]
        assert list(rows[0]) == list(cli.T_SENS_HEADER)

    def test_sweep_dropout(self, sim, tmp_path):
        logs = [sim / "mc_T10_p0.5_test.jsonl", sim / "mc_T10_p0_test.jsonl"]
        assert run("sweep-dropout", *logs, "--out-dir", tmp_path) == 0
        rows = report.read_table(tmp_path / "dropout_ablation.csv")
        assert [float(r["p"]) for r in rows] == [0.0, 0.5]
        assert float(rows[0]["mean Var"]) == 0.0 < float(rows[1]["mean Var"])


class TestCompare:
    def test_delong_json(self, sim, tmp_path, capsys):
        assert run("compare", "--a", sim / "det_ood.jsonl", "--b", sim / "ensemble_K2_ood.jsonl",
                   "--labels-from", "a", "--out-dir", tmp_path) == 0
        out = json.loads((tmp_path / "compare.json").read_text())
        assert {"AUC_ref", "AUC_cmp", "dAUC", "p", "decision"} <= set(out)
        assert out["decision"] in ("sig.", "n.s.")
        assert out["dAUC"] == pytest.approx(out["AUC_cmp"] - out["AUC_ref"], abs=1e-12)

    def test_temperature_not_applicable(self, sim, tmp_path):
        temp = tmp_path / "temp.jsonl"
        run("calibrate", "--val", sim / "det_val.jsonl", "--apply", sim / "det_ood.jsonl", "--out", temp)
        assert run("compare", "--a", sim / "det_ood.jsonl", "--b", temp, "--out-dir", tmp_path) == 0
        out = json.loads((tmp_path / "compare.json").read_text())
        assert out["decision"] == "not applicable" and out["p"] is None
        assert run("compare", "--a", sim / "det_ood.jsonl", "--b", temp, "--force", "--out-dir", tmp_path) == 0
        forced = json.loads((tmp_path / "compare.json").read_text())
        assert forced["degenerate"] and forced["p"] == 1.0

    def test_misaligned(self, sim, tmp_path, capsys):
        assert run("compare", "--a", sim / "det_test.jsonl", "--b", sim / "det_ood.jsonl",
                   "--out-dir", tmp_path) == 2


@pytest.fixture(scope="module")
def figs(sim, tmp_path_factory):
    out = tmp_path_factory.mktemp("figs")
    assert run("figures", sim / "mc_T10_test.jsonl", "--out-dir", out) == 0
    assert run("figures", sim / "det_test.jsonl", "--kinds", "roc,reliability", "--prefix", "det_",
               "--out-dir", out) == 0
    return out


class TestFigures:
    def test_all_kinds_written(self, figs):
        for kind in report.FIGURE_KINDS:
            assert (figs / f"fig_{kind}.csv").exists()
            svg = (figs / f"fig_{kind}.svg").read_text()
            assert svg.lstrip().startswith("<?xml") and "<svg" in svg

    def test_roc_area_matches_report(self, sim, figs):
        rows = report.read_table(figs / "det_roc.csv")
        area = trapezoid_area([float(r["fpr"]) for r in rows], [float(r["tpr"]) for r in rows])
        assert abs(area - metric_report(load_log(sim / "det_test.jsonl")).auc) <= 1e-9

    def test_reliability_reproduces_ece(self, sim, figs):
        rows = report.read_table(figs / "fig_reliability.csv")
        assert list(rows[0]) == ["edge_lo", "edge_hi", "count", "mean_prob", "pos_rate"]
        n = sum(int(r["count"]) for r in rows)
        total = 0.0
        for r in rows:
            if int(r["count"]):
                total += (int(r["count"]) / n) * abs(float(r["pos_rate"]) - float(r["mean_prob"]))
        log = summarize_log(load_log(sim / "mc_T10_test.jsonl"))
        assert total == metric_report(log).ece

    def test_histogram_conserves_counts(self, sim, figs):
        rows = report.read_table(figs / "fig_histogram.csv")
        y = load_log(sim / "mc_T10_test.jsonl").labels()
        assert sum(int(r["real"]) for r in rows) == (y == 0).sum()
        assert sum(int(r["fake"]) for r in rows) == (y == 1).sum()

    def test_svg_is_deterministic(self, sim, tmp_path):
        for d in ("a", "b"):
            assert run("figures", sim / "det_test.jsonl", "--kinds", "roc", "--out-dir", tmp_path / d) == 0
        assert (tmp_path / "a" / "fig_roc.svg").read_bytes() == (tmp_path / "b" / "fig_roc.svg").read_bytes()

    def test_missing_fields(self, sim, tmp_path, capsys):
        assert run("figures", sim / "det_test.jsonl", "--kinds", "entropy", "--out-dir", tmp_path) == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "reliabench", "--version"], capture_output=True, text=True)
    assert out.returncode == 0 and out.stdout.strip()
