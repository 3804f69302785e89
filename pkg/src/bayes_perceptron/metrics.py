import numpy as np


def _paired(pred, truth):
    pred = np.asarray(pred, dtype=np.float64).reshape(-1)
    if pred.size == 0:
        raise ValueError("empty input")
    if truth is None:
        return pred
    truth = np.asarray(truth, dtype=np.float64).reshape(-1)
    if truth.shape != pred.shape:
        raise ValueError(f"length mismatch: {pred.size} vs {truth.size}")
    return pred - truth


def mae(values, truth=None) -> float:
    """Mean absolute error; with ``truth`` omitted ``values`` are the errors."""
    return float(np.mean(np.abs(_paired(values, truth))))


def rmse(pred, truth) -> float:
    return float(np.sqrt(np.mean(_paired(pred, truth) ** 2)))


def cumulative_abs_error_distribution(errors):
    """Empirical CDF of ``|errors|`` as ``[(error, P(|e| <= error)), ...]``.

    One pair per distinct value, so the steps are right-continuous and the
    last probability is 1.
    """
    e = np.sort(np.abs(np.asarray(errors, dtype=np.float64).reshape(-1)))
    if e.size == 0:
        raise ValueError("empty input")
    values, counts = np.unique(e, return_counts=True)
    cum = np.cumsum(counts) / e.size
    return [(float(v), float(c)) for v, c in zip(values, cum)]
