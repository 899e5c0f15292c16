"""Sample covariances, Hill tail index and variance-scaling slopes."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
from scipy import stats

from ..errors import NumericalError, SpecError

__all__ = [
    "sample_cov",
    "panel_cov",
    "TailIndex",
    "tail_index",
    "partial_sum_slope",
    "empirical_var_points",
]


def sample_cov(series, k: int, demean: bool = True) -> float:
    """Biased lag-k autocovariance of a single series (divisor n)."""
    x = np.asarray(series, dtype=float)
    n = x.size
    if not 0 <= k < n:
        raise SpecError(f"lag {k} out of range for series of length {n}")
    if demean:
        x = x - x.mean()
    return float(np.dot(x[: n - k], x[k:]) / n)


def panel_cov(panel, k: int) -> float:
    """Pooled lag-k autocovariance of a panel, averaged over all available products.

    With n observations per row there are (n-k)N products X_j(t) X_j(t+k);
    indexing a row as X(0..n-1) this is the (n'-k+1)N denominator for the
    last index n' = n-1.  No mean is removed.
    """
    vals = panel.values if hasattr(panel, "values") else np.asarray(panel, dtype=float)
    if vals.ndim == 1:
        vals = vals[None, :]
    N, n = vals.shape
    if not 0 <= k < n:
        raise SpecError(f"lag {k} out of range for rows of length {n}")
    prods = np.einsum("ij,ij->i", vals[:, : n - k], vals[:, k:])
    return math.fsum(prods) / ((n - k) * N)


@dataclass(frozen=True)
class TailIndex:
    estimate: float
    lower: float
    upper: float
    k: int


def tail_index(series, k: int | None = None, level: float = 0.95) -> TailIndex:
    """Hill estimate of the tail index of |series| on the top k = ceil(n^0.6) order statistics.

    The interval is the asymptotic normal one, alpha_hat (1 +- z / sqrt(k)).
    """
    x = np.abs(np.asarray(series, dtype=float).ravel())
    n = x.size
    if n < 1000:
        raise SpecError("tail index needs at least 1000 observations")
    if k is None:
        k = math.ceil(n**0.6)
    if not 1 <= k < n:
        raise SpecError("k must lie in [1, n)")
    top = np.sort(x)[::-1][: k + 1]
    if top[k] <= 0 or top[0] == top[k]:
        raise NumericalError("degenerate series: no spread in the upper order statistics")
    h = float(np.mean(np.log(top[:k] / top[k])))
    est = 1.0 / h
    z = stats.norm.ppf(0.5 + level / 2)
    return TailIndex(est, est * (1 - z / math.sqrt(k)), est * (1 + z / math.sqrt(k)), int(k))


def partial_sum_slope(var_points: Sequence[tuple[float, float]]) -> float:
    """Least-squares slope of log Var against log n."""
    pts = np.asarray(list(var_points), dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 4:
        raise SpecError("need at least 4 (n, variance) points")
    if np.any(pts[:, 1] <= 0) or np.any(pts[:, 0] <= 0):
        raise SpecError("sizes and variances must be positive")
    slope, _ = np.polyfit(np.log(pts[:, 0]), np.log(pts[:, 1]), 1)
    return float(slope)


def empirical_var_points(replicates, ns: Iterable[int]) -> list[tuple[int, float]]:
    """Across-replicate variance of partial sums S_m, one replicate series per row."""
    r = np.asarray(replicates, dtype=float)
    if r.ndim != 2 or r.shape[0] < 2:
        raise SpecError("need a (replicates, n) array with at least two replicates")
    cums = np.cumsum(r, axis=1)
    out = []
    for m in ns:
        m = int(m)
        if not 1 <= m <= r.shape[1]:
            raise SpecError(f"partial-sum length {m} exceeds series length")
        out.append((m, float(np.var(cums[:, m - 1], ddof=1))))
    return out
