"""
Classification and calibration metrics
======================================

Builds a small prediction log by hand and reports accuracy, ROC-AUC with
tied scores, ECE, Brier score and NLL.
"""

import numpy as np

from reliabench import PredictionLog
from reliabench.metrics import confusion_at_threshold, metric_report, reliability_bins, roc_curve

# label 1 is the "fake" class; a record is called fake when prob >= 0.5
rng = np.random.default_rng(0)
labels = rng.integers(0, 2, 200)
# scores rounded to one decimal so ties are common
probs = np.clip(np.round(0.5 + 0.3 * (2 * labels - 1) + rng.normal(0, 0.25, 200), 1), 0, 1)
log = PredictionLog([{"id": f"r{i}", "label": int(y), "prob": float(p)}
                     for i, (p, y) in enumerate(zip(probs, labels))])

print(confusion_at_threshold(log, 0.5))
rep = metric_report(log)
for key, value in rep.row().items():
    print(f"{key:>6}: {value}")

# tied scores collapse into a single ROC vertex
curve = roc_curve(probs, labels)
print("ROC vertices:", len(curve.fpr), "area:", round(curve.area(), 6))

# per-bin view behind the ECE number
bins = reliability_bins(probs, labels, n_bins=10)
for lo, n, conf, emp in zip(bins.lower, bins.count, bins.mean_conf, bins.empirical):
    if n:
        print(f"bin {lo:.1f}: n={n:3d} conf={conf:.3f} empirical={emp:.3f}")
