"""Renewal sequence ``u_n = lambda{y in Y : T^n y in Y}`` and conservativity.

Two independent routes: pushing the mass of Lebesgue measure on Y through
the Ulam operator (default, noise free), and Monte-Carlo iteration of uniform
points of Y (validator).  ``sum_n u_n^d`` decides whether the d-fold product
is conservative; its divergence threshold is ``alpha = d / (d - 1)``.
"""

from dataclasses import dataclass, field
from typing import Optional

import numba as nb
import numpy as np

from .errors import MeshMisaligned
from .maps import MapSpec, step
from .rng import stream_key2, uniform
from .stats import LogLogFit, last_decade_increment, log_spaced, loglog_fit
from .transfer import UlamOperator

Y_MEASURE = 0.5

# stream tags for the counter-based generator
TAG_RENEWAL = 1
TAG_SIMULTANEOUS = 2


@dataclass(frozen=True)
class RenewalSeq:
    u: np.ndarray
    method: str                       # "operator" or "montecarlo"
    stderr: Optional[np.ndarray] = None
    samples: int = 0

    @property
    def N(self):
        return len(self.u) - 1

    @property
    def n(self):
        return np.arange(len(self.u))


def un_operator(op: UlamOperator, N: int) -> RenewalSeq:
    """``u_n`` for n = 0..N by pushing ``1_Y`` through the Ulam operator."""
    mesh = op.mesh
    if not mesh.has_boundary(0.5):
        raise MeshMisaligned("the mesh needs a cell boundary at 1/2")
    Y = mesh.cells_in(0.5, 1.0)
    m = np.where(Y, mesh.widths, 0.0)
    u = np.empty(N + 1)
    u[0] = m.sum()
    for n in range(1, N + 1):
        m = op.push_mass(m)
        u[n] = m[Y].sum()
    return RenewalSeq(u, "operator")


def _chunks(samples, N):
    # fixed work split: independent of the number of threads
    return int(max(1, min(64, samples, 20_000_000 // (N + 1))))


@nb.njit(cache=True, parallel=True)
def _mc_hits(seed, N, samples, chunks, kind, alpha, beta):
    hits = np.zeros((chunks, N + 1), dtype=np.int64)
    per = (samples + chunks - 1) // chunks
    for c in nb.prange(chunks):
        lo = c * per
        hi = min(samples, lo + per)
        for s in range(lo, hi):
            key = stream_key2(seed, s, TAG_RENEWAL)
            x = 0.5 + 0.5 * uniform(key, 0)
            hits[c, 0] += 1
            for n in range(1, N + 1):
                x = step(x, kind, alpha, beta)
                if x >= 0.5:
                    hits[c, n] += 1
    return hits.sum(axis=0)


def un_montecarlo(spec: MapSpec, N: int, samples: int, seed: int = 0) -> RenewalSeq:
    """Monte-Carlo ``u_n`` from ``samples`` uniform points of Y, with binomial errors."""
    if samples < 1000:
        raise ValueError("samples must be >= 1000")
    hits = _mc_hits(np.uint64(seed), int(N), int(samples), _chunks(samples, N),
                    spec.code, spec.alpha, spec.beta)
    p = hits / samples
    u = Y_MEASURE * p
    se = Y_MEASURE * np.sqrt(p * (1.0 - p) / samples)
    return RenewalSeq(u, "montecarlo", se, int(samples))


def tail_exponent_fit(seq: RenewalSeq, window) -> LogLogFit:
    """Least-squares slope of ``log u_n`` against ``log n`` on ``window``."""
    lo, hi = window
    if lo < 1 or hi > seq.N:
        raise ValueError("window must lie within [1, N]")
    return loglog_fit(seq.n, seq.u, window)


# ---------------------------------------------------------------------------
# conservativity


@dataclass(frozen=True)
class ConservativityReport:
    d: int
    k: np.ndarray
    partial_sums: np.ndarray
    increment: float
    exponent: float             # fitted exponent of u_n^d over the last decade
    remainder: float            # extrapolated sum_{n > N} u_n^d (inf if exponent >= -1)
    verdict: str
    threshold: float            # d / (d - 1)

    @property
    def total(self):
        return float(self.partial_sums[-1])


def critical_alpha(d):
    return float("inf") if d == 1 else d / (d - 1)


def conservativity_index(seq: RenewalSeq, d: int, window=None) -> ConservativityReport:
    """Evidence on whether ``sum_n u_n^d`` diverges.

    Divergent when the partial sums grow by more than 5% over the last decade;
    Convergent when they grow by less than 0.5% and a power law fitted to the
    last decade has exponent below -1 (finite remainder); else Inconclusive.
    """
    if d < 1:
        raise ValueError("d must be >= 1")
    ud = seq.u**d
    S = np.cumsum(ud)
    N = seq.N
    inc = last_decade_increment(S)
    window = window or (max(1, N // 10), N)
    fit = loglog_fit(seq.n, ud, window)
    p = fit.slope
    if p < -1:
        C = np.exp(fit.intercept)
        remainder = float(C * N ** (p + 1) / (-p - 1))
    else:
        remainder = float("inf")
    if inc > 0.05:
        verdict = "Divergent"
    elif inc < 0.005 and np.isfinite(remainder):
        verdict = "Convergent"
    else:
        verdict = "Inconclusive"
    k = log_spaced(N)
    return ConservativityReport(d, k, S[k], inc, p, remainder, verdict, critical_alpha(d))


# ---------------------------------------------------------------------------
# simultaneous returns


@nb.njit(cache=True, parallel=True)
def _simultaneous(seed, d, N, samples, checkpoints, probes, kind, alpha, beta):
    counts = np.zeros((samples, checkpoints.shape[0]), dtype=np.int64)
    probe_hits = np.zeros((samples, probes.shape[0]), dtype=np.int8)
    for s in nb.prange(samples):
        key = stream_key2(seed, s, TAG_SIMULTANEOUS)
        x = np.empty(d)
        for c in range(d):
            x[c] = 0.5 + 0.5 * uniform(key, c)
        cnt = 0
        ci = 0
        pi = 0
        for n in range(1, N + 1):
            allin = True
            for c in range(d):
                x[c] = step(x[c], kind, alpha, beta)
                if x[c] < 0.5:
                    allin = False
            if allin:
                cnt += 1
            while pi < probes.shape[0] and probes[pi] == n:
                if allin:
                    probe_hits[s, pi] = 1
                pi += 1
            while ci < checkpoints.shape[0] and checkpoints[ci] == n:
                counts[s, ci] = cnt
                ci += 1
    return counts, probe_hits


@dataclass(frozen=True)
class SimultaneousReturns:
    d: int
    checkpoints: np.ndarray
    counts: np.ndarray          # (samples, checkpoints): #{1 <= n <= N_k : all coords in Y}
    probes: np.ndarray
    probe_freq: np.ndarray      # fraction of tuples with all coords in Y at each probe step
    expected: Optional[np.ndarray] = field(default=None)

    @property
    def mean(self):
        return self.counts.mean(axis=0)

    @property
    def median(self):
        return np.median(self.counts, axis=0)


def simultaneous_return_count(spec: MapSpec, d: int, N: int, samples: int, seed: int = 0,
                              checkpoints=None, probes=(), u: Optional[RenewalSeq] = None):
    """Count simultaneous visits of ``T_d^n(y)`` to ``Y^d`` for tuples uniform on ``Y^d``.

    Normalisation: for a tuple uniform on Y^d the chance of being in Y^d at
    step n is ``(u_n / lambda(Y))^d``, so the expected count up to N is
    ``sum_{n=1..N} (2 u_n)^d``; multiplying by ``lambda(Y)^d`` recovers the
    product-measure identity ``lambda_d{y in Y^d : T_d^n y in Y^d} = u_n^d``.
    When ``u`` is given, ``expected`` holds that sum at every checkpoint.
    """
    if d < 1 or samples < 100:
        raise ValueError("need d >= 1 and samples >= 100")
    cps = np.asarray(sorted(checkpoints or [max(1, N // 2), N]), dtype=np.int64)
    pr = np.asarray(sorted(probes), dtype=np.int64)
    counts, hits = _simultaneous(np.uint64(seed), int(d), int(N), int(samples), cps, pr,
                                 spec.code, spec.alpha, spec.beta)
    expected = None
    if u is not None:
        terms = (u.u[1:] / Y_MEASURE) ** d
        cs = np.cumsum(terms)
        expected = np.array([cs[c - 1] if c - 1 < len(cs) else np.nan for c in cps])
    return SimultaneousReturns(d, cps, counts, pr, hits.mean(axis=0) if len(pr) else np.empty(0), expected)
