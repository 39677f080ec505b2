"""Post-hoc temperature scaling.

The temperature is parameterised as ``tau = exp(alpha)`` and fitted by
minimising validation NLL of ``sigmoid(logit / tau)``. Optimisation is a
200-point grid over ``alpha in [ln 0.01, ln 100]`` followed by golden-section
refinement inside the bracketing grid cell.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .core import PredictionLog, sigmoid
from .errors import DegenerateLabels, MissingLogits

TAU_MIN = 0.01
TAU_MAX = 100.0
GRID_POINTS = 200
ALPHA_TOL = 1e-6

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0


class BoundaryTemperature(UserWarning):
    """The fitted temperature sits on a search bound."""


@dataclass(frozen=True)
class Temperature:
    tau: float
    alpha: float
    val_nll_at_tau: float
    val_nll_at_one: float
    at_bound: bool = False

    def to_dict(self) -> dict:
        return {
            "tau": self.tau,
            "alpha": self.alpha,
            "val_nll_at_tau": self.val_nll_at_tau,
            "val_nll_at_one": self.val_nll_at_one,
            "at_bound": self.at_bound,
        }


def _softplus(x):
    return np.logaddexp(0.0, x)


def scaled_nll(logits, labels, tau) -> float:
    """NLL of ``sigmoid(logits / tau)`` computed in log space (no clipping)."""
    z = np.asarray(logits, dtype=np.float64) / tau
    sign = 2.0 * np.asarray(labels, dtype=np.float64) - 1.0
    return float(np.mean(_softplus(-sign * z)))


def _require_logits(log: PredictionLog) -> np.ndarray:
    z = log.logits()
    if z is None:
        raise MissingLogits("every record needs a logit for temperature scaling")
    return z


def fit_temperature_arrays(logits, labels, warn=True) -> Temperature:
    z = np.asarray(logits, dtype=np.float64)
    y = np.asarray(labels, dtype=np.int64)
    if y.min(initial=1) == y.max(initial=0) or z.size == 0:
        raise DegenerateLabels("temperature fitting needs both classes")

    def f(alpha):
        return scaled_nll(z, y, math.exp(alpha))

    lo_a, hi_a = math.log(TAU_MIN), math.log(TAU_MAX)
    grid = np.linspace(lo_a, hi_a, GRID_POINTS)
    vals = np.array([f(a) for a in grid])
    k = int(np.argmin(vals))
    a, b = grid[max(k - 1, 0)], grid[min(k + 1, GRID_POINTS - 1)]

    c = b - _INV_PHI * (b - a)
    d = a + _INV_PHI * (b - a)
    fc, fd = f(c), f(d)
    while b - a > ALPHA_TOL:
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INV_PHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INV_PHI * (b - a)
            fd = f(d)
    alpha = (a + b) / 2.0

    # the bounds, the best grid point and tau = 1 compete with the refined value
    candidates = [(f(alpha), alpha), (vals[k], float(grid[k])),
                  (vals[0], lo_a), (vals[-1], hi_a), (f(0.0), 0.0)]
    best_val, alpha = min(candidates, key=lambda t: (t[0], t[1]))
    at_bound = alpha in (lo_a, hi_a)
    tau = TAU_MIN if alpha == lo_a else TAU_MAX if alpha == hi_a else math.exp(alpha)
    if at_bound and warn:
        warnings.warn(f"fitted temperature hit the search bound (tau={tau})", BoundaryTemperature,
                      stacklevel=2)
    return Temperature(tau=tau, alpha=alpha, val_nll_at_tau=best_val,
                       val_nll_at_one=f(0.0), at_bound=at_bound)


def fit_temperature(val_log: PredictionLog, warn=True) -> Temperature:
    """Fit tau on a validation log's logits. Deterministic."""
    return fit_temperature_arrays(_require_logits(val_log), val_log.labels(), warn=warn)


def apply_temperature(log: PredictionLog, temp: Temperature | float) -> PredictionLog:
    """Rescale probabilities to ``sigmoid(logit / tau)``; logits and strata are kept."""
    tau = temp.tau if isinstance(temp, Temperature) else float(temp)
    z = _require_logits(log)
    probs = sigmoid(z / tau)
    recs = []
    for r, p in zip(log, np.atleast_1d(probs)):
        d = r.to_dict()
        d["prob"] = float(p)
        d["temperature"] = tau
        recs.append(d)
    return PredictionLog(recs, {**dict(log.meta), "temperature": tau, "mode": "temperature"})
