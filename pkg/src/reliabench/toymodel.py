"""A desk-scale stochastic predictor.

Two Gaussian blobs in the plane stand in for real/fake samples, and a
one-hidden-layer ReLU MLP with inverted dropout stands in for a CNN
backbone. Training uses BCE-with-logits, mini-batch Adam with L2 weight
decay and early stopping on validation NLL. The trained model produces the
same prediction logs (deterministic, MC dropout, ensemble members) that a
real detector would.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .core import PredictionLog, sigmoid
from .errors import DivergedLoss

ID_GENERATORS = ("A", "B", "C", "D")
OOD_GENERATORS = ("E", "F")
JPEG_QUALITIES = ("95", "75", "45", "10")


@dataclass
class SyntheticDataset:
    """Points, labels, split names and per-point strata, all index-aligned."""

    X: np.ndarray
    y: np.ndarray
    split: np.ndarray
    strata: list
    ids: list
    params: dict = field(default_factory=dict)

    def indices(self, split: str) -> np.ndarray:
        return np.flatnonzero(self.split == split)

    def subset(self, split: str):
        idx = self.indices(split)
        return self.X[idx], self.y[idx]

    def manifest(self) -> dict:
        counts = {}
        for s in ("train", "val", "test", "ood"):
            idx = self.indices(s)
            counts[s] = {"n": int(idx.size), "positives": int(self.y[idx].sum())}
        return {"generator": "two-gaussians", "params": dict(self.params), "splits": counts}


def _split_counts(k, fractions):
    n_train = int(round(k * fractions[0]))
    n_val = int(round(k * fractions[1]))
    return n_train, n_val, k - n_train - n_val


def gen_synthetic(n=4000, seed=42, overlap=1.0, ood_shift=0.0, n_ood=None,
                  fractions=(0.7, 0.15, 0.15)) -> SyntheticDataset:
    """Two isotropic Gaussians with covariance ``overlap * I``.

    Class 0 ("real") is centred at (-1, 0), class 1 ("fake") at (+1, 0).
    ``n`` in-distribution points are split per class into train/val/test, so
    each split is class-balanced up to one sample. An extra ``ood`` split
    (default size: the test size) is drawn with both means moved by
    ``ood_shift`` along the first axis and fake samples from unseen generators.
    """
    if n % 2:
        raise ValueError("n must be even")
    if overlap <= 0:
        raise ValueError("overlap must be positive")
    rng = np.random.default_rng(seed)
    std = math.sqrt(overlap)
    half = n // 2
    n_tr, n_va, n_te = _split_counts(half, fractions)
    if n_ood is None:
        n_ood = 2 * n_te

    X, y, split = [], [], []
    for label, mean_x in ((0, -1.0), (1, 1.0)):
        pts = rng.normal(0.0, std, size=(half, 2)) + np.array([mean_x, 0.0])
        X.append(pts)
        y.append(np.full(half, label))
        split.append(np.array(["train"] * n_tr + ["val"] * n_va + ["test"] * n_te))
    ood_half = [n_ood // 2, n_ood - n_ood // 2]
    for label, mean_x in ((0, -1.0), (1, 1.0)):
        k = ood_half[label]
        pts = rng.normal(0.0, std, size=(k, 2)) + np.array([mean_x + ood_shift, 0.0])
        X.append(pts)
        y.append(np.full(k, label))
        split.append(np.array(["ood"] * k))
    X = np.vstack(X)
    y = np.concatenate(y).astype(np.int64)
    split = np.concatenate(split)

    # interleave so record order does not reveal the class
    perm = rng.permutation(len(y))
    X, y, split = X[perm], y[perm], split[perm]

    strata = []
    gen_id = rng.integers(0, len(ID_GENERATORS), size=len(y))
    gen_ood = rng.integers(0, len(OOD_GENERATORS), size=len(y))
    jpeg = rng.integers(0, len(JPEG_QUALITIES), size=len(y))
    for i in range(len(y)):
        # every record carries a source generator so per-generator strata hold both classes
        if split[i] == "ood":
            gen = OOD_GENERATORS[gen_ood[i]]
        else:
            gen = ID_GENERATORS[gen_id[i]]
        strata.append({"generator": gen, "jpeg_quality": JPEG_QUALITIES[jpeg[i]],
                       "noise_level": repr(float(overlap))})
    ids = [f"s{i:05d}" for i in range(len(y))]
    params = {"n": n, "seed": seed, "overlap": overlap, "ood_shift": ood_shift, "n_ood": n_ood}
    return SyntheticDataset(X=X, y=y, split=split, strata=strata, ids=ids, params=params)


@dataclass
class ToyModel:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    dropout_p: float = 0.2

    def __post_init__(self):
        if not 0.0 <= self.dropout_p < 1.0:
            raise ValueError("dropout_p must be in [0, 1)")
        self.b2 = np.asarray(self.b2, dtype=np.float64).reshape(())

    @property
    def hidden(self) -> int:
        return self.b1.size

    def params(self) -> list:
        return [self.W1, self.b1, self.W2, self.b2]

    def copy(self) -> "ToyModel":
        return ToyModel(self.W1.copy(), self.b1.copy(), self.W2.copy(), self.b2.copy(), self.dropout_p)

    def to_dict(self) -> dict:
        return {"W1": self.W1.tolist(), "b1": self.b1.tolist(), "W2": self.W2.tolist(),
                "b2": float(self.b2), "dropout_p": self.dropout_p}

    @classmethod
    def from_dict(cls, d) -> "ToyModel":
        return cls(np.asarray(d["W1"], float), np.asarray(d["b1"], float),
                   np.asarray(d["W2"], float), np.asarray(d["b2"], float), d["dropout_p"])

    @classmethod
    def zeros(cls, hidden=16, dropout_p=0.0) -> "ToyModel":
        return cls(np.zeros((2, hidden)), np.zeros(hidden), np.zeros(hidden), np.zeros(()), dropout_p)

    @classmethod
    def init(cls, rng, hidden=16, dropout_p=0.2) -> "ToyModel":
        """Uniform init in ``+-1/sqrt(fan_in)`` for weights and biases."""
        b_in, b_h = 1.0 / math.sqrt(2), 1.0 / math.sqrt(hidden)
        return cls(rng.uniform(-b_in, b_in, (2, hidden)), rng.uniform(-b_in, b_in, hidden),
                   rng.uniform(-b_h, b_h, hidden), rng.uniform(-b_h, b_h), dropout_p)


def _dropout_mask(rng, shape, p):
    return (rng.random(shape) >= p) / (1.0 - p)


def forward(model: ToyModel, x, mode="deterministic", rng=None, dropout_p=None):
    """Logits for a batch ``x`` (``n x 2`` or a single point).

    ``stochastic`` mode applies inverted dropout to the hidden layer with
    probability ``dropout_p`` (defaults to the model's own rate).
    """
    X = np.atleast_2d(np.asarray(x, dtype=np.float64))
    h = np.maximum(X @ model.W1 + model.b1, 0.0)
    p = model.dropout_p if dropout_p is None else dropout_p
    if mode == "stochastic" and p > 0.0:
        if rng is None:
            raise ValueError("stochastic forward needs an rng")
        h = h * _dropout_mask(rng, h.shape, p)
    elif mode not in ("deterministic", "stochastic"):
        raise ValueError(f"unknown mode {mode!r}")
    z = h @ model.W2 + model.b2
    return z if np.ndim(x) > 1 else z[0]


def bce_loss(logits, labels) -> float:
    """Mean BCE-with-logits: ``max(z,0) - z*y + log(1 + exp(-|z|))``."""
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64)
    return float(np.mean(np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))))


def loss_and_grads(model: ToyModel, X, y, mask=None):
    """BCE loss and gradients w.r.t. ``[W1, b1, W2, b2]``.

    ``mask`` is an already-scaled dropout mask for the hidden layer (or None).
    """
    a = X @ model.W1 + model.b1
    h = np.maximum(a, 0.0)
    hd = h if mask is None else h * mask
    z = hd @ model.W2 + model.b2
    loss = bce_loss(z, y)
    dz = (sigmoid(z) - y) / len(y)
    gW2 = hd.T @ dz
    gb2 = np.asarray(dz.sum())
    dhd = np.outer(dz, model.W2)
    dh = dhd if mask is None else dhd * mask
    da = dh * (a > 0)
    gW1 = X.T @ da
    gb1 = da.sum(axis=0)
    return loss, [gW1, gb1, gW2, gb2]


def gradient_check(model: ToyModel, X, y, epsilon=1e-5) -> float:
    """Max relative error between analytic and central-difference gradients.

    Dropout is off. Samples with a hidden pre-activation within the
    perturbation reach of the ReLU kink are left out.
    """
    if not 1e-6 <= epsilon <= 1e-4:
        raise ValueError("epsilon must be in [1e-6, 1e-4]")
    X = np.atleast_2d(np.asarray(X, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    a = X @ model.W1 + model.b1
    reach = epsilon * (1.0 + np.abs(X).sum(axis=1, keepdims=True)) * 10.0
    keep = np.all(np.abs(a) > reach, axis=1)
    X, y = X[keep], y[keep]
    if len(y) == 0:
        raise ValueError("every sample sits on a ReLU kink")
    m = model.copy()
    _, grads = loss_and_grads(m, X, y)
    worst = 0.0
    for param, grad in zip(m.params(), grads):
        flat = param.reshape(-1)
        gflat = np.asarray(grad).reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + epsilon
            lp = bce_loss(forward(m, X), y)
            flat[i] = orig - epsilon
            lm = bce_loss(forward(m, X), y)
            flat[i] = orig
            num = (lp - lm) / (2.0 * epsilon)
            denom = max(abs(num) + abs(gflat[i]), 1e-6)
            worst = max(worst, abs(num - gflat[i]) / denom)
    return worst


@dataclass(frozen=True)
class TrainConfig:
    lr: float = 1e-3
    weight_decay: float = 1e-4
    batch_size: int = 32
    max_epochs: int = 30
    patience: int = 5
    seed: int = 42
    dropout_p: float = 0.2
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    hidden: int = 16

    def __post_init__(self):
        if self.lr <= 0:
            raise ValueError("lr must be positive")
        if not 1 <= self.patience <= self.max_epochs:
            raise ValueError("patience must be in [1, max_epochs]")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class EpochRecord:
    epoch: int
    train_loss: float
    val_nll: float


@dataclass
class TrainResult:
    model: ToyModel
    trace: list
    best_epoch: int
    epochs_run: int


class _Adam:
    def __init__(self, params, cfg: TrainConfig):
        self.cfg = cfg
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.t = 0

    def step(self, params, grads):
        c = self.cfg
        self.t += 1
        bc1 = 1.0 - c.beta1**self.t
        bc2 = 1.0 - c.beta2**self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            g = g + c.weight_decay * p
            m *= c.beta1
            m += (1.0 - c.beta1) * g
            v *= c.beta2
            v += (1.0 - c.beta2) * g * g
            p -= c.lr * (m / bc1) / (np.sqrt(v / bc2) + c.adam_eps)


def train(dataset: SyntheticDataset, config: TrainConfig = TrainConfig()) -> TrainResult:
    """Train on the ``train`` split; keep the checkpoint with the best validation NLL."""
    Xtr, ytr = dataset.subset("train")
    Xva, yva = dataset.subset("val")
    if len(ytr) == 0 or len(yva) == 0:
        raise ValueError("train and val splits must be non-empty")
    rng = np.random.default_rng(config.seed)
    model = ToyModel.init(rng, config.hidden, config.dropout_p)
    opt = _Adam(model.params(), config)
    best, best_nll, best_epoch = model.copy(), math.inf, 0
    trace = []
    for epoch in range(1, config.max_epochs + 1):
        perm = rng.permutation(len(ytr))
        total = 0.0
        for start in range(0, len(ytr), config.batch_size):
            idx = perm[start:start + config.batch_size]
            mask = None
            if config.dropout_p > 0:
                mask = _dropout_mask(rng, (idx.size, config.hidden), config.dropout_p)
            with np.errstate(over="ignore", invalid="ignore"):
                loss, grads = loss_and_grads(model, Xtr[idx], ytr[idx], mask)
            if not math.isfinite(loss):
                raise DivergedLoss(f"non-finite training loss at epoch {epoch}", trace=trace)
            total += loss * idx.size
            opt.step(model.params(), grads)
        with np.errstate(over="ignore", invalid="ignore"):
            val_nll = bce_loss(forward(model, Xva), yva)
        if not math.isfinite(val_nll):
            raise DivergedLoss(f"non-finite validation NLL at epoch {epoch}", trace=trace)
        trace.append(EpochRecord(epoch, total / len(ytr), val_nll))
        if val_nll < best_nll:
            best, best_nll, best_epoch = model.copy(), val_nll, epoch
        elif epoch - best_epoch >= config.patience:
            break
    return TrainResult(model=best, trace=trace, best_epoch=best_epoch, epochs_run=len(trace))


def train_ensemble(dataset: SyntheticDataset, config: TrainConfig, seeds) -> list:
    """One model per seed; everything else in ``config`` is shared."""
    seeds = list(seeds)
    if len(set(seeds)) != len(seeds):
        raise ValueError("ensemble seeds must be distinct")
    return [train(dataset, TrainConfig(**{**config.to_dict(), "seed": s})).model for s in seeds]


def predict_log(model: ToyModel, dataset: SyntheticDataset, split="test", mode="deterministic",
                T=20, dropout_p=None, seed=0, name="toy-mlp") -> PredictionLog:
    """Prediction log for one split.

    ``deterministic`` and ``ensemble-member`` records carry ``logit`` and
    ``prob``; ``mc`` records carry ``T`` sampled probabilities drawn with
    ``dropout_p`` (default: the model's rate). Record ``i`` of the dataset
    draws its masks from ``default_rng([seed, i])``.
    """
    idx = dataset.indices(split)
    X = dataset.X[idx]
    meta = {"model": name, "mode": mode, "seed": seed, "split": split,
            "dropout_p": model.dropout_p if dropout_p is None else dropout_p}
    recs = []
    if mode in ("deterministic", "ensemble-member"):
        z = forward(model, X)
        for j, i in enumerate(idx):
            recs.append({"id": dataset.ids[i], "split": split, "label": int(dataset.y[i]),
                         "logit": float(z[j]), "strata": dataset.strata[i]})
    elif mode == "mc":
        if T < 1:
            raise ValueError("T must be >= 1")
        p = model.dropout_p if dropout_p is None else dropout_p
        h = np.maximum(X @ model.W1 + model.b1, 0.0)
        for j, i in enumerate(idx):
            if p > 0:
                mask = _dropout_mask(np.random.default_rng([seed, int(i)]), (T, model.hidden), p)
                z = (h[j] * mask) @ model.W2 + model.b2
            else:
                z = np.full(T, h[j] @ model.W2 + model.b2)
            recs.append({"id": dataset.ids[i], "split": split, "label": int(dataset.y[i]),
                         "mc_probs": sigmoid(z).tolist(), "strata": dataset.strata[i]})
        meta["T"] = T
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return PredictionLog(recs, meta)
