"""First-return dynamics of the Manneville-Pomeau map on Y = [1/2, 1].

The left-branch preimages ``y_n`` of 1/2 (``y_0 = 1/2``, ``T(y_{n+1}) = y_n``)
organise everything: the other preimage ``y'_{n+1} = (1 + y_n)/2`` of ``y_n``
lies in Y and the return-time cylinders are

    {tau = 1} = [y'_1, 1] = [3/4, 1],   {tau = n} = [y'_n, y'_{n-1}),

so ``lambda(tau >= n + 2) = y_n / 2``.
"""

from dataclasses import dataclass
from typing import NamedTuple

import numba as nb
import numpy as np

from .errors import NonConvergence
from .maps import MANPOM, MapSpec, _left_inverse_scalar, step
from .rng import stream_key2, uniform
from .stats import LogLogFit, last_decade_increment, loglog_fit

Y_LO, Y_HI = 0.5, 1.0
DEFAULT_CAP = 10**8


class Censored(NamedTuple):
    """Return time not observed within ``cap`` iterations."""

    cap: int


def _require_manpom(spec):
    if spec.kind != "manpom":
        raise ValueError("inducing is implemented for the Manneville-Pomeau map only")


@dataclass(frozen=True)
class ReturnStructure:
    alpha: float
    y: np.ndarray          # y[n], n = 0..n_max
    yprime: np.ndarray     # yprime[n] = y'_n for n = 1..n_max+1; yprime[0] = 1
    n_max: int

    @property
    def beta(self):
        return 1.0 / self.alpha

    @property
    def cylinder_tau(self):
        return np.arange(1, self.n_max + 1)

    @property
    def cylinder_lo(self):
        return self.yprime[1:self.n_max + 1]

    @property
    def cylinder_hi(self):
        return self.yprime[0:self.n_max]

    @property
    def cylinders(self):
        """List of ``((lo, hi), tau)``; the tau = 1 cylinder is closed at 1."""
        return [((float(lo), float(hi)), int(t))
                for lo, hi, t in zip(self.cylinder_lo, self.cylinder_hi, self.cylinder_tau)]

    def cylinder_measure(self):
        """``lambda(tau = n)`` for n = 1..n_max, computed from y differences."""
        out = np.empty(self.n_max)
        out[0] = 0.25
        out[1:] = 0.5 * (self.y[:self.n_max - 1] - self.y[1:self.n_max])
        return out

    def tail(self):
        """``lambda(tau >= n)`` for n = 1..n_max."""
        out = np.empty(self.n_max)
        out[0] = 0.5
        out[1:] = 0.5 * self.y[:self.n_max - 1]
        return out

    @property
    def censored_measure(self):
        """``lambda(tau > n_max) = y_{n_max - 1} / 2``."""
        return 0.5 * self.y[self.n_max - 1]

    def tau_of(self, y):
        """Return time read off the cylinder partition; ``n_max + 1`` means beyond depth."""
        y = np.asarray(y, dtype=float)
        # yprime[0..n_max] is decreasing; tau = n iff yprime[n] <= y < yprime[n-1]
        asc = self.yprime[: self.n_max + 1][::-1]
        k = np.searchsorted(asc, y, side="right")
        tau = self.n_max + 1 - k
        tau = np.where(y >= 1.0, 1, tau)
        return tau if tau.ndim else int(tau)


@nb.njit(cache=True)
def _preimage_chain(alpha, n_max):
    y = np.empty(n_max + 1)
    y[0] = 0.5
    worst = 0.0
    for k in range(1, n_max + 1):
        yk = _left_inverse_scalar(y[k - 1], alpha)
        y[k] = yk
        r = abs(yk + yk * (2.0 * yk) ** alpha - y[k - 1])
        if r > worst:
            worst = r
    return y, worst


def compute_yn(spec: MapSpec, n_max: int) -> ReturnStructure:
    """Preimage sequences ``y_n`` (n <= n_max) and ``y'_n`` (n <= n_max + 1)."""
    _require_manpom(spec)
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    y, worst = _preimage_chain(spec.alpha, int(n_max))
    if worst >= 1e-13 or not np.all(np.diff(y) < 0):
        raise NonConvergence("preimage chain failed", residual=worst)
    yprime = np.empty(n_max + 2)
    yprime[0] = 1.0
    yprime[1:] = 0.5 * (1.0 + y)
    return ReturnStructure(spec.alpha, y, yprime, int(n_max))


cylinder_partition = compute_yn


@nb.njit(cache=True)
def _return_time(y, kind, alpha, beta, cap):
    x = y
    for n in range(1, cap + 1):
        x = step(x, kind, alpha, beta)
        if x >= 0.5:
            return n, x
    return -1, x


def return_time(spec: MapSpec, y: float, cap: int = DEFAULT_CAP):
    """First ``n >= 1`` with ``T^n(y)`` in Y, or :class:`Censored`."""
    if not Y_LO <= y <= Y_HI:
        raise ValueError("y must lie in [1/2, 1]")
    n, _ = _return_time(float(y), spec.code, spec.alpha, spec.beta, int(cap))
    return Censored(cap) if n < 0 else n


def induced_step(spec: MapSpec, y: float, cap: int = DEFAULT_CAP):
    """``(F(y), tau(y))`` with F the first-return map; censored returns give ``(nan, Censored)``."""
    if not Y_LO <= y <= Y_HI:
        raise ValueError("y must lie in [1/2, 1]")
    n, x = _return_time(float(y), spec.code, spec.alpha, spec.beta, int(cap))
    if n < 0:
        return float("nan"), Censored(cap)
    return x, n


@nb.njit(cache=True)
def _sample_return_times(seed, n, kind, alpha, beta, cap):
    key = stream_key2(seed, 0, 0)
    ys = np.empty(n)
    taus = np.empty(n, dtype=np.int64)
    for i in range(n):
        y = 0.5 + 0.5 * uniform(key, i)
        ys[i] = y
        taus[i], _ = _return_time(y, kind, alpha, beta, cap)
    return ys, taus


def sample_return_times(spec, n, seed=0, cap=DEFAULT_CAP):
    """Uniform points of Y and their directly iterated return times (-1 = censored)."""
    return _sample_return_times(np.uint64(seed), int(n), spec.code, spec.alpha, spec.beta, int(cap))


# ---------------------------------------------------------------------------
# tails


@dataclass(frozen=True)
class TailReport:
    n: np.ndarray
    tail: np.ndarray             # lambda(tau >= n)
    partial_sums: np.ndarray     # sum_{k <= n} k lambda(tau = k)
    fit: LogLogFit
    window: tuple
    increment: float             # relative growth of partial sums over the last decade
    diagnosis: str               # "Convergent", "Divergent" or "Inconclusive"
    censored_measure: float


def tail_measure(spec: MapSpec, n_max: int, window=None, structure=None) -> TailReport:
    if n_max < 10:
        raise ValueError("n_max must be >= 10")
    rs = structure if structure is not None else compute_yn(spec, n_max)
    n = np.arange(1, n_max + 1)
    tail = rs.tail()[:n_max]
    mass = rs.cylinder_measure()[:n_max]
    sums = np.cumsum(n * mass)
    window = tuple(window) if window is not None else (100, max(n_max // 10, 101))
    fit = loglog_fit(n, tail, window)
    inc = last_decade_increment(sums, n)
    if inc < 0.01:
        diag = "Convergent"
    elif inc > 0.10:
        diag = "Divergent"
    else:
        diag = "Inconclusive"
    return TailReport(n, tail, sums, fit, window, inc, diag, rs.censored_measure)


# ---------------------------------------------------------------------------
# distortion


@nb.njit(cache=True)
def _log_jacobians(itin, z, alpha):
    # For the depth-k cylinder with return times itin[0..k-1], pull each z in Y
    # back through the inverse branches and accumulate log J_{F^k} along the
    # exact backward orbit.
    m = z.shape[0]
    out = np.empty(m)
    k = itin.shape[0]
    for s in range(m):
        w = z[s]
        logj = 0.0
        for lev in range(k - 1, -1, -1):
            n = itin[lev]
            for _ in range(n - 1):
                w = _left_inverse_scalar(w, alpha)
                logj += np.log(1.0 + (1.0 + alpha) * (2.0 * w) ** alpha)
            w = 0.5 * (1.0 + w)
            logj += np.log(2.0)
        out[s] = logj
    return out


@dataclass(frozen=True)
class DistortionReport:
    k_hat: np.ndarray          # running sup over depths 1..depth
    per_depth: np.ndarray      # sup ratio observed at each depth
    cylinders: np.ndarray      # cylinders sampled per depth
    skipped: int


def cylinder_ratio(spec, itinerary, samples=1000):
    """max J / min J of ``F^k`` over ``samples`` points of one cylinder."""
    _require_manpom(spec)
    z = np.linspace(0.5, 1.0, samples)
    lj = _log_jacobians(np.asarray(itinerary, dtype=np.int64), z, spec.alpha)
    if not np.all(np.isfinite(lj)):
        return float("nan")
    return float(np.exp(lj.max() - lj.min()))


def distortion_estimate(spec: MapSpec, depth: int, samples_per_cylinder: int = 1000,
                        max_return: int = 50, max_cylinders: int = 200, seed: int = 0):
    """Sampled bounded-distortion probe for the iterates ``F^k``, ``k <= depth``.

    Depth-k cylinders are indexed by itineraries of return times in
    ``1..max_return``.  All of them are used when there are at most
    ``max_cylinders``; otherwise a deterministic random subset of that size
    (stream keyed by ``(seed, k)``) is drawn.
    """
    _require_manpom(spec)
    if depth < 1:
        raise ValueError("depth must be >= 1")
    per_depth = np.zeros(depth)
    counts = np.zeros(depth, dtype=np.int64)
    skipped = 0
    for k in range(1, depth + 1):
        total = max_return**k
        if total <= max_cylinders:
            grids = np.indices((max_return,) * k).reshape(k, -1).T + 1
        else:
            rng = np.random.Generator(np.random.Philox(key=[seed, k]))
            grids = rng.integers(1, max_return + 1, size=(max_cylinders, k))
        best = 1.0
        for itin in grids:
            r = cylinder_ratio(spec, itin, samples_per_cylinder)
            if not np.isfinite(r):
                skipped += 1
                continue
            best = max(best, r)
        per_depth[k - 1] = best
        counts[k - 1] = len(grids)
    return DistortionReport(np.maximum.accumulate(per_depth), per_depth, counts, skipped)
