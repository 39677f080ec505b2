"""
Confidence-band variance sweep
==============================

Within each band of predictive confidence, compares the error rate of the
highest-variance records against the lowest-variance ones, with a
percentile bootstrap interval per cell.
"""

from reliabench.report import grid_rows
from reliabench.risk import band_sweep
from reliabench.stochastic import summarize_log
from reliabench.toymodel import TrainConfig, gen_synthetic, predict_log, train

ds = gen_synthetic(n=4000, seed=42, overlap=0.5)
model = train(ds, TrainConfig(seed=42)).model
log = summarize_log(predict_log(model, ds, "test", "mc", T=20, seed=0))

grid = band_sweep(log, B=500, seed=0)
header, rows = grid_rows(grid)
print(" | ".join(header))
for row in rows:
    print(" | ".join(str(v) for v in row))
for col in grid.summary()["columns"]:
    print(col)
