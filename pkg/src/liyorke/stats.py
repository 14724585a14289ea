"""Small statistical helpers: log-log fits, Wilson intervals, series diagnostics."""

from typing import NamedTuple

import numpy as np
from scipy import stats as _st

from .errors import EmptyWindow, NonPositiveValues


class LogLogFit(NamedTuple):
    slope: float
    intercept: float
    r2: float
    npts: int


def loglog_fit(n, values, window):
    """Least squares of log(values) against log(n) for ``window[0] <= n <= window[1]``."""
    n = np.asarray(n, dtype=float)
    values = np.asarray(values, dtype=float)
    lo, hi = window
    sel = (n >= lo) & (n <= hi)
    if sel.sum() < 2:
        raise EmptyWindow(f"fewer than two points in window [{lo}, {hi}]")
    if np.any(values[sel] <= 0) or np.any(n[sel] <= 0):
        raise NonPositiveValues("log-log fit needs strictly positive values")
    res = _st.linregress(np.log(n[sel]), np.log(values[sel]))
    return LogLogFit(float(res.slope), float(res.intercept), float(res.rvalue**2), int(sel.sum()))


def wilson_interval(successes, trials, z=1.959963984540054):
    """Wilson score interval for a binomial proportion (95% by default)."""
    if trials == 0:
        return 0.0, 1.0
    p = successes / trials
    denom = 1.0 + z * z / trials
    centre = (p + z * z / (2 * trials)) / denom
    half = z * np.sqrt(p * (1 - p) / trials + z * z / (4 * trials * trials)) / denom
    lo = 0.0 if successes == 0 else max(0.0, centre - half)
    hi = 1.0 if successes == trials else min(1.0, centre + half)
    return float(lo), float(hi)


def last_decade_increment(partial_sums, n_index=None):
    """Relative growth ``(S_N - S_{N/10}) / S_N`` of a partial-sum array.

    ``partial_sums[k]`` is the sum up to index ``n_index[k]`` (defaults to k).
    """
    s = np.asarray(partial_sums, dtype=float)
    idx = np.arange(len(s)) if n_index is None else np.asarray(n_index)
    n_last = idx[-1]
    k = int(np.searchsorted(idx, n_last / 10.0, side="left"))
    if s[-1] == 0:
        return 0.0
    return float((s[-1] - s[k]) / s[-1])


def log_spaced(n_max, per_decade=10, start=1):
    """Integer indices ``start..n_max`` spaced logarithmically, endpoints included."""
    if n_max <= start:
        return np.array([n_max], dtype=np.int64)
    m = int(np.ceil(np.log10(n_max / start) * per_decade)) + 1
    pts = np.unique(np.round(np.logspace(np.log10(start), np.log10(n_max), m)).astype(np.int64))
    return pts
