"""Independent reference implementations used only by the test-suite.

Each oracle is written from the definition with plain loops or brute force,
sharing no code with the package under test.
"""

import math

import numpy as np
from scipy.stats import norm


def pair_count_auc(scores, labels):
    """Mean over (positive, negative) pairs of 1[s+ > s-] + 0.5 * 1[s+ == s-]."""
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    total = 0.0
    for sp in pos:
        for sn in neg:
            total += 1.0 if sp > sn else 0.5 if sp == sn else 0.0
    return total / (len(pos) * len(neg))


def loop_ece(probs, labels, n_bins):
    """Positive-probability ECE with bins [k/B, (k+1)/B), last bin closed."""
    n = len(probs)
    total = 0.0
    for k in range(n_bins):
        lo, hi = k / n_bins, (k + 1) / n_bins
        members = [i for i, p in enumerate(probs)
                   if (lo <= p < hi) or (k == n_bins - 1 and p == 1.0)]
        if not members:
            continue
        conf = sum(probs[i] for i in members) / len(members)
        rate = sum(labels[i] for i in members) / len(members)
        total += len(members) / n * abs(rate - conf)
    return total


def two_pass_variance(samples):
    mu = sum(samples) / len(samples)
    return sum((s - mu) ** 2 for s in samples) / len(samples)


def grid_temperature(logits, labels, n_grid=10_000, tau_min=0.01, tau_max=100.0):
    """Dense log-spaced grid minimiser of the temperature-scaled NLL."""
    z = np.asarray(logits, dtype=float)
    y = np.asarray(labels, dtype=float)
    taus = np.exp(np.linspace(math.log(tau_min), math.log(tau_max), n_grid))
    s = z[None, :] / taus[:, None]
    # -log p(y|s) = log(1 + exp(-s)) for y=1 and log(1 + exp(s)) for y=0
    losses = np.mean(np.logaddexp(0.0, np.where(y == 1, -s, s)), axis=1)
    return float(taus[np.argmin(losses)])


def resampling_delong_p(scores_a, scores_b, labels, draws=200_000, seed=0):
    """Two-sided p for AUC(b) - AUC(a) from a class-stratified paired bootstrap.

    Positives and negatives are resampled separately (label-preserving); each
    draw's AUC difference is evaluated exactly from multinomial weights on the
    pairwise credit matrix. The p-value is the normal tail at the observed
    difference over the bootstrap standard deviation.
    """
    a = np.asarray(scores_a, dtype=float)
    b = np.asarray(scores_b, dtype=float)
    y = np.asarray(labels)
    pos, neg = y == 1, y == 0
    m, n = int(pos.sum()), int(neg.sum())

    def credit(s):
        sp, sn = s[pos][:, None], s[neg][None, :]
        return (sp > sn) + 0.5 * (sp == sn)

    D = credit(b) - credit(a)
    rng = np.random.default_rng(seed)
    wp = rng.multinomial(m, np.full(m, 1.0 / m), size=draws).astype(float)
    wn = rng.multinomial(n, np.full(n, 1.0 / n), size=draws).astype(float)
    deltas = ((wp @ D) * wn).sum(axis=1) / (m * n)
    sd = deltas.std()
    if sd == 0:
        return 1.0
    return float(2.0 * norm.sf(abs(D.mean()) / sd))


def numeric_sigmoid(z):
    return 1.0 / (1.0 + math.exp(-z))
