"""
Toy MLP training and gradient check
===================================

Verifies the analytic gradients against central differences, then trains
with early stopping and prints the epoch trace.
"""

import numpy as np

from reliabench.metrics import metric_report
from reliabench.toymodel import ToyModel, TrainConfig, gen_synthetic, gradient_check, predict_log, train

rng = np.random.default_rng(0)
model = ToyModel.init(rng, hidden=16, dropout_p=0.0)
X, y = rng.normal(size=(32, 2)), rng.integers(0, 2, 32).astype(float)
print("max relative gradient error:", gradient_check(model, X, y))

ds = gen_synthetic(n=4000, seed=21, overlap=0.25)
result = train(ds, TrainConfig(seed=21))
for rec in result.trace:
    mark = " *" if rec.epoch == result.best_epoch else ""
    print(f"epoch {rec.epoch:2d}  train {rec.train_loss:.4f}  val {rec.val_nll:.4f}{mark}")
rep = metric_report(predict_log(result.model, ds, "test"))
print(f"test acc={rep.acc:.4f} auc={rep.auc:.4f}")
