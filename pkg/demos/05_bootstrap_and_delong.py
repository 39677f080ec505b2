"""
Bootstrap intervals and paired AUC comparison
=============================================

Percentile bootstrap intervals for accuracy and ECE, then a DeLong test
comparing two detectors scored on the same records.
"""

import numpy as np

from reliabench import PredictionLog
from reliabench.stats import bootstrap_ci, delong_test, stat_accuracy, stat_ece

rng = np.random.default_rng(5)
y = rng.integers(0, 2, 500)
strong = y + rng.normal(0, 0.8, 500)
weak = y + rng.normal(0, 1.2, 500)

log = PredictionLog([{"id": f"r{i}", "label": int(t), "logit": float(s)}
                     for i, (s, t) in enumerate(zip(strong, y))])
for name, stat in (("accuracy", stat_accuracy()), ("ECE", stat_ece())):
    r = bootstrap_ci(stat, log, B=1000, seed=0)
    print(f"{name:8} {r.point:.4f}  95% CI [{r.ci_low:.4f}, {r.ci_high:.4f}]")

res = delong_test(weak, strong, y)
print(f"AUC weak={res.auc_a:.4f} strong={res.auc_b:.4f} delta={res.delta:+.4f} "
      f"p={res.p_two_sided:.3g} -> {res.decision()}")
