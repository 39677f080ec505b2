import numpy as np


def midranks(values) -> np.ndarray:
    """1-based ranks with ties replaced by their average rank."""
    x = np.asarray(values, dtype=np.float64)
    if x.ndim != 1 or x.size == 0:
        raise ValueError("midranks needs a non-empty 1-D input")
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    # start index of each run of equal values
    starts = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1]])
    ends = np.r_[starts[1:], xs.size]
    avg = (starts + ends + 1) / 2.0
    sorted_ranks = np.repeat(avg, ends - starts)
    ranks = np.empty_like(sorted_ranks)
    ranks[order] = sorted_ranks
    return ranks
