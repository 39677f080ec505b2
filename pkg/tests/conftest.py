import numpy as np
import pytest

from reliabench.core import PredictionLog

CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(name): acceptance criterion covered by a test")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    name = dict(report.user_properties).get("criterion")
    if name is None:
        return
    ok = report.passed
    CRITERIA[name] = CRITERIA.get(name, True) and ok


def pytest_runtest_setup(item):
    marker = item.get_closest_marker("criterion")
    if marker is not None:
        item.user_properties.append(("criterion", marker.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, ok in CRITERIA.items():
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {name}")


def make_log(probs, labels, **extra):
    """Tiny helper: build a log from parallel arrays plus optional per-record fields."""
    records = []
    for i, (p, y) in enumerate(zip(probs, labels)):
        rec = {"id": f"r{i:04d}", "label": int(y), "prob": float(p)}
        for key, values in extra.items():
            rec[key] = values[i]
        records.append(rec)
    return PredictionLog(records)


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


def planted_band_log(n=4000, seed=0, band=(0.85, 0.95), error_quantile=0.7, base_error=0.05):
    """MC log whose high-variance records inside ``band`` are planted errors.

    Each record has two MC samples ``mu -/+ d``, so ``mc_mean = mu`` and
    ``mc_var = d**2``. Inside ``band`` a record is misclassified exactly when
    its ``d`` exceeds the band's ``error_quantile``; elsewhere errors occur at
    rate ``base_error`` independently of ``d``.
    """
    g = np.random.default_rng(seed)
    mu = g.uniform(0.5, 1.0, n)
    d = g.uniform(0.0, 1.0, n) * np.minimum(0.08, np.minimum(mu, 1.0 - mu))
    in_band = (mu >= band[0]) & (mu <= band[1])
    cut = np.quantile(d[in_band], error_quantile)
    wrong = np.where(in_band, d > cut, g.uniform(size=n) < base_error)
    labels = np.where(wrong, 0, 1)
    return PredictionLog(
        [{"id": f"p{i:05d}", "label": int(labels[i]), "mc_probs": [mu[i] - d[i], mu[i] + d[i]]}
         for i in range(n)],
        meta={"mode": "mc", "T": 2},
    )
