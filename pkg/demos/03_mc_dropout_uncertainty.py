"""
Monte Carlo dropout uncertainty
===============================

Trains the two-Gaussian toy model, draws stochastic forward passes and
summarises them into a predictive mean, variance and entropy. Errors
concentrate at high entropy.
"""

import numpy as np

from reliabench.risk import entropy_by_correctness, error_auroc, error_indicator
from reliabench.stochastic import LN2, summarize_log
from reliabench.toymodel import TrainConfig, gen_synthetic, predict_log, train

ds = gen_synthetic(n=4000, seed=42, overlap=0.5)
model = train(ds, TrainConfig(seed=42)).model

mc = predict_log(model, ds, "test", "mc", T=50, seed=0)
for T in (1, 5, 20, 50):
    cols = summarize_log(mc, T=T).columns()
    err = error_indicator(cols.probs, cols.labels)
    print(f"T={T:2d}  mean var={cols.mc_var.mean():.5f}  "
          f"entropy error-AUROC={error_auroc(cols.mc_entropy, err):.3f}")

summary = summarize_log(mc, T=20)
print("max entropy:", round(float(np.max(summary.columns().mc_entropy)), 4), "bound:", round(LN2, 4))
for group, stats in entropy_by_correctness(summary).items():
    print(group, stats)
