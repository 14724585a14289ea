"""Finite-horizon Li-Yorke statistics of d-tuples.

A d-tuple is iterated coordinate-wise.  At every step the largest and the
smallest pairwise distance are formed; proximality is read from the running
minimum of the largest distance and separation from the running maximum of
the smallest one.  All statements are "at horizon N": the asymptotic
liminf/limsup conditions are replaced by running extrema plus a late-window
check on ``[N/2, N]``.
"""

from dataclasses import dataclass, field, asdict
from typing import NamedTuple, Optional, Sequence

import numba as nb
import numpy as np

from .errors import BoxOverflow
from .maps import DOUBLING, MapSpec, metric_dist, step
from .rng import draw, stream_key2, uniform
from .stats import wilson_interval

TAG_TUPLES = 3
TAG_EXPANSIVITY = 4
TAG_BOX = 5
_STREAMS_PER_ROW = 16


@dataclass(frozen=True)
class TupleConfig:
    map: MapSpec
    d: int
    N: int
    delta: float
    eps_prox: float = 1e-3
    burn_in: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("d must be >= 2")
        if self.N < 1:
            raise ValueError("N must be >= 1")
        if not 0 < self.eps_prox < self.delta < 1:
            raise ValueError("need 0 < eps_prox < delta < 1")


@dataclass(frozen=True)
class TupleStats:
    min_over_n_of_maxpair: float
    max_over_n_of_minpair: float
    first_prox_time: Optional[int]
    first_sep_time: Optional[int]
    late_window_max_minpair: float
    late_window_max_maxpair: float
    simultaneous_Y_count: int


class Flags(NamedTuple):
    proximal_at_horizon: bool
    separated_at_horizon: bool
    LY_at_horizon: bool
    asymptotic_proxy: bool


# ---------------------------------------------------------------------------
# kernel


@nb.njit(cache=True, inline="always")
def _pair_extrema(x, d, metric):
    mx = 0.0
    mn = 2.0
    for i in range(d):
        for j in range(i + 1, d):
            r = metric_dist(x[i], x[j], metric)
            if r > mx:
                mx = r
            if r < mn:
                mn = r
    return mx, mn


@nb.njit(cache=True)
def _run_tuple(x, kind, alpha, beta, metric, horizons, eps, delta, burn_in,
               refresh, key, out_f, out_i):
    # out_f[k] = (min maxpair, max minpair, late max minpair, late max maxpair)
    # out_i[k] = (first prox time, first sep time, simultaneous Y count)
    d = x.shape[0]
    K = horizons.shape[0]
    N = horizons[K - 1]
    # doubling with fresh low bits: coordinates held as 53-bit integers
    bits = np.zeros(d, dtype=np.uint64)
    pool = np.zeros(d, dtype=np.uint64)
    left = np.zeros(d, dtype=np.int64)
    ctr = d
    mask = np.uint64((1 << 53) - 1)
    if refresh:
        for c in range(d):
            bits[c] = np.uint64(x[c] * 9007199254740992.0) & mask
    for _ in range(burn_in):
        for c in range(d):
            if refresh:
                if left[c] == 0:
                    pool[c] = draw(key, ctr)
                    ctr += 1
                    left[c] = 64
                bits[c] = ((bits[c] << np.uint64(1)) & mask) | (pool[c] & np.uint64(1))
                pool[c] >>= np.uint64(1)
                left[c] -= 1
                x[c] = np.float64(bits[c]) * 1.1102230246251565e-16
            else:
                x[c] = step(x[c], kind, alpha, beta)
    min_max = 2.0
    max_min = -1.0
    first_p = -1
    first_s = -1
    ycount = 0
    late_min = np.full(K, -1.0)
    late_max = np.full(K, -1.0)
    kk = 0
    for n in range(N + 1):
        if n > 0:
            allin = True
            for c in range(d):
                if refresh:
                    if left[c] == 0:
                        pool[c] = draw(key, ctr)
                        ctr += 1
                        left[c] = 64
                    bits[c] = ((bits[c] << np.uint64(1)) & mask) | (pool[c] & np.uint64(1))
                    pool[c] >>= np.uint64(1)
                    left[c] -= 1
                    x[c] = np.float64(bits[c]) * 1.1102230246251565e-16
                else:
                    x[c] = step(x[c], kind, alpha, beta)
                if x[c] < 0.5:
                    allin = False
            if allin:
                ycount += 1
        mx, mn = _pair_extrema(x, d, metric)
        if mx < min_max:
            min_max = mx
        if mn > max_min:
            max_min = mn
        if first_p < 0 and mx < eps:
            first_p = n
        if first_s < 0 and mn > delta:
            first_s = n
        for k in range(kk, K):
            if 2 * n >= horizons[k]:
                if mn > late_min[k]:
                    late_min[k] = mn
                if mx > late_max[k]:
                    late_max[k] = mx
        while kk < K and horizons[kk] == n:
            out_f[kk, 0] = min_max
            out_f[kk, 1] = max_min
            out_f[kk, 2] = late_min[kk]
            out_f[kk, 3] = late_max[kk]
            out_i[kk, 0] = first_p
            out_i[kk, 1] = first_s
            out_i[kk, 2] = ycount
            kk += 1


@nb.njit(cache=True, parallel=True)
def _run_many(seed, row, d, kind, alpha, beta, metric, horizons, eps, delta,
              burn_in, refresh, samples):
    K = horizons.shape[0]
    out_f = np.zeros((samples, K, 4))
    out_i = np.zeros((samples, K, 3), dtype=np.int64)
    for s in nb.prange(samples):
        key = stream_key2(seed, s, row * _STREAMS_PER_ROW + TAG_TUPLES)
        x = np.empty(d)
        for c in range(d):
            x[c] = uniform(key, c)
        _run_tuple(x, kind, alpha, beta, metric, horizons, eps, delta, burn_in,
                   refresh, key, out_f[s], out_i[s])
    return out_f, out_i


def _stats_from(f, i):
    return TupleStats(
        float(f[0]), float(f[1]),
        None if i[0] < 0 else int(i[0]),
        None if i[1] < 0 else int(i[1]),
        float(f[2]), float(f[3]), int(i[2]),
    )


def simulate_tuple(cfg: TupleConfig, x: Sequence[float], horizons=None):
    """Statistics of one tuple at horizon ``cfg.N`` (or at each of ``horizons``).

    ``x`` is used exactly as given: no random digits are appended, so for the
    doubling map the floating-point orbit collapses onto 0 after ~53 steps.
    """
    spec = cfg.map
    xs = np.array(x, dtype=float)
    if xs.shape != (cfg.d,) or np.any(xs < 0) or np.any(xs > 1):
        raise ValueError("x must hold d points of [0, 1]")
    hz = np.asarray(sorted(horizons) if horizons else [cfg.N], dtype=np.int64)
    out_f = np.zeros((len(hz), 4))
    out_i = np.zeros((len(hz), 3), dtype=np.int64)
    _run_tuple(xs, spec.code, spec.alpha, spec.beta, spec.metric_code, hz, cfg.eps_prox,
               cfg.delta, cfg.burn_in, False, np.uint64(0), out_f, out_i)
    stats = [_stats_from(out_f[k], out_i[k]) for k in range(len(hz))]
    return stats if horizons else stats[0]


def classify(stats: TupleStats, delta: float, eps_prox: float) -> Flags:
    prox = stats.min_over_n_of_maxpair < eps_prox
    sep = stats.max_over_n_of_minpair > delta
    asym = stats.late_window_max_minpair < eps_prox and stats.late_window_max_maxpair < eps_prox
    return Flags(prox, sep, prox and sep, asym)


# ---------------------------------------------------------------------------
# measure estimates


@dataclass
class PhaseRow:
    map: str
    alpha: float
    d: int
    delta: float
    eps_prox: float
    N: int
    samples: int
    frac_proximal: float
    frac_separated: float
    frac_LY: float
    frac_asymptotic_proxy: float
    frac_late_separated: float       # late-window min-pair distance > eps_late
    eps_late: float
    ci_proximal: tuple = (0.0, 1.0)
    ci_separated: tuple = (0.0, 1.0)
    ci_LY: tuple = (0.0, 1.0)
    ci_asymptotic_proxy: tuple = (0.0, 1.0)
    ci_late_separated: tuple = (0.0, 1.0)
    prediction_LY: str = ""
    prediction_conservative: str = ""

    def as_dict(self):
        out = {}
        for k, v in asdict(self).items():
            if isinstance(v, tuple):
                out[k + "_lo"], out[k + "_hi"] = v
            else:
                out[k] = v
        return out


@dataclass(frozen=True)
class MeasureEstimate:
    rows: list                       # one PhaseRow per horizon, increasing N
    stats_f: np.ndarray = field(repr=False)
    stats_i: np.ndarray = field(repr=False)

    @property
    def final(self):
        return self.rows[-1]


def predictions(spec: MapSpec, d: int):
    """Analytic expectations for Manneville-Pomeau rows: (LY, conservativity)."""
    if spec.kind == "doubling":
        return "LY-full", "conservative"
    a = spec.alpha
    if d == 2:
        ly = "LY-full"
    else:
        crit = (d - 1) / (d - 2)
        ly = "critical" if np.isclose(a, crit) else ("LY-full" if a < crit else "not-LY")
    cons_crit = d / (d - 1)
    if np.isclose(a, cons_crit):
        cons = "critical"
    else:
        cons = "conservative" if a < cons_crit else "dissipative"
    return ly, cons


def measure_estimate(cfg: TupleConfig, samples: int, horizons=None, eps_late=None,
                     row_index: int = 0, refresh_bits=None) -> MeasureEstimate:
    """Fractions of i.i.d. uniform d-tuples that are proximal / separated / LY.

    One simulation reports every horizon in ``horizons`` (default ``[N/2, N]``);
    flags are running extrema, hence nondecreasing in the horizon.  For the
    doubling map, coordinates receive fresh random low-order bits (default),
    which reproduces the orbit of a Lebesgue-typical point exactly.
    """
    if samples < 100:
        raise ValueError("samples must be >= 100")
    spec = cfg.map
    if spec.kind == "custom":
        raise ValueError("tuple simulation needs a built-in map")
    hz = sorted(set(horizons or [max(1, cfg.N // 2), cfg.N]) | {cfg.N})
    hz = np.asarray(hz, dtype=np.int64)
    refresh = (spec.kind == "doubling") if refresh_bits is None else bool(refresh_bits)
    eps_late = cfg.eps_prox if eps_late is None else eps_late
    f, i = _run_many(np.uint64(cfg.seed), int(row_index), cfg.d, spec.code, spec.alpha, spec.beta,
                     spec.metric_code, hz, cfg.eps_prox, cfg.delta, cfg.burn_in, refresh, int(samples))
    ly, cons = predictions(spec, cfg.d)
    rows = []
    for k, H in enumerate(hz):
        prox = f[:, k, 0] < cfg.eps_prox
        sep = f[:, k, 1] > cfg.delta
        lyf = prox & sep
        asym = (f[:, k, 2] < cfg.eps_prox) & (f[:, k, 3] < cfg.eps_prox)
        late = f[:, k, 2] > eps_late
        n = samples
        rows.append(PhaseRow(
            spec.kind, spec.alpha, cfg.d, cfg.delta, cfg.eps_prox, int(H), n,
            prox.mean(), sep.mean(), lyf.mean(), asym.mean(), late.mean(), eps_late,
            wilson_interval(prox.sum(), n), wilson_interval(sep.sum(), n),
            wilson_interval(lyf.sum(), n), wilson_interval(asym.sum(), n),
            wilson_interval(late.sum(), n), ly, cons,
        ))
    return MeasureEstimate(rows, f, i)


def default_delta(d):
    """``min(1/3, 0.8 / (2 (d - 2)))`` for d >= 3 and 1/3 for pairs."""
    if d == 2:
        return 1.0 / 3.0
    return min(1.0 / 3.0, 0.8 / (2.0 * (d - 2)))


def phase_sweep(alphas, ds, N, samples, seed=0, delta_rule=default_delta, eps_prox=1e-3,
                eps_late=None, kind="manpom", metric="interval", horizons=None):
    """Grid of :func:`measure_estimate` rows over (alpha, d), with analytic predictions.

    ``kind="manpom2"`` sweeps the two-neutral-point map with beta = alpha
    (exploratory, no analytic prediction is claimed for it).
    """
    rows = []
    r = 0
    for a in alphas:
        for d in ds:
            if kind == "manpom2":
                spec = MapSpec.manpom_two(a, a, metric)
            elif kind == "doubling":
                spec = MapSpec.doubling(metric)
            else:
                spec = MapSpec.manpom(a, metric)
            cfg = TupleConfig(spec, d, N, delta_rule(d), eps_prox, 0, seed)
            est = measure_estimate(cfg, samples, horizons, eps_late, row_index=r)
            row = est.final
            if kind == "manpom2":
                row.prediction_LY = "exploratory"
                row.prediction_conservative = "exploratory"
            rows.append(row)
            r += 1
    return rows


# ---------------------------------------------------------------------------
# expansivity and separation box


@nb.njit(cache=True, parallel=True)
def _expansivity(seed, trials, kind, alpha, beta, metric, chunks):
    per = (trials + chunks - 1) // chunks
    viol = np.zeros(chunks, dtype=np.int64)
    straddle = np.zeros(chunks, dtype=np.int64)
    excluded = np.zeros(chunks, dtype=np.int64)
    min_ratio = np.full(chunks, np.inf)
    same_min = np.full(chunks, np.inf)
    for c in nb.prange(chunks):
        key = stream_key2(seed, c, TAG_EXPANSIVITY)
        ctr = 0
        for t in range(c * per, min(trials, (c + 1) * per)):
            while True:
                x = uniform(key, ctr)
                y = x + (2.0 * uniform(key, ctr + 1) - 1.0) / 3.0
                ctr += 2
                if y < 0.0 or y > 1.0:
                    continue
                r = metric_dist(x, y, metric)
                if r > 1.0 / 3.0:
                    continue
                if r < 1e-15:
                    excluded[c] += 1
                    continue
                break
            r2 = metric_dist(step(x, kind, alpha, beta), step(y, kind, alpha, beta), metric)
            ratio = r2 / r
            if ratio < min_ratio[c]:
                min_ratio[c] = ratio
            cross = (x < 0.5) != (y < 0.5)
            if not cross and ratio < same_min[c]:
                same_min[c] = ratio
            if r2 < r * (1.0 - 1e-12):
                viol[c] += 1
                if cross:
                    straddle[c] += 1
    return viol.sum(), straddle.sum(), excluded.sum(), min_ratio.min(), same_min.min()


class ExpansivityReport(NamedTuple):
    trials: int
    violations: int
    straddling_violations: int     # pairs on opposite sides of 1/2
    excluded: int                  # resampled pairs with |x - y| < 1e-15
    min_ratio: float
    min_ratio_same_branch: float


def expansivity_check(spec: MapSpec, trials: int, seed: int = 0) -> ExpansivityReport:
    """Sample pairs with ``rho(x, y) <= 1/3`` and test ``rho(Tx, Ty) >= rho(x, y) (1 - 1e-12)``.

    Pairs are uniform on the band ``|x - y| <= 1/3`` of the unit square.
    """
    chunks = 64
    v, s, e, mr, ms = _expansivity(np.uint64(seed), int(trials), spec.code, spec.alpha,
                                   spec.beta, spec.metric_code, chunks)
    return ExpansivityReport(int(trials), int(v), int(s), int(e), float(mr), float(ms))


def pair_expansion(spec: MapSpec, x: float, y: float):
    """``(rho, rho')`` for one pair."""
    from .maps import dist, evaluate
    return dist(spec, x, y), dist(spec, evaluate(spec, x), evaluate(spec, y))


def separation_box(d: int, eta: float):
    """Corners of the box ``[1/2, 1/2+eta] x ... x [1-eta, 1]`` in ``Y^{d-1}``."""
    if d < 3:
        raise ValueError("the separation box needs d >= 3")
    gap = 1.0 / (2.0 * (d - 2))
    lo = np.array([0.5 + i * gap for i in range(d - 2)] + [1.0 - eta])
    hi = lo + eta
    if lo[0] < 0.5 or hi[-1] > 1.0 + 1e-15 or np.any(lo[1:] < hi[:-1]):
        raise BoxOverflow(f"eta={eta} does not fit {d - 1} disjoint slots in [1/2, 1]")
    return lo, np.minimum(hi, 1.0)


@nb.njit(cache=True, parallel=True)
def _box_hits(seed, m, N, lo, hi, checkpoints, samples, kind, alpha, beta):
    K = checkpoints.shape[0]
    first = np.full(samples, -1, dtype=np.int64)
    for s in nb.prange(samples):
        key = stream_key2(seed, s, TAG_BOX)
        x = np.empty(m)
        for c in range(m):
            x[c] = 0.5 + 0.5 * uniform(key, c)
        for n in range(1, N + 1):
            inside = True
            for c in range(m):
                x[c] = step(x[c], kind, alpha, beta)
                if x[c] < lo[c] or x[c] > hi[c]:
                    inside = False
            if inside:
                first[s] = n
                break
    out = np.zeros(K, dtype=np.int64)
    for k in range(K):
        for s in range(samples):
            if first[s] > 0 and first[s] <= checkpoints[k]:
                out[k] += 1
    return out, first


class BoxHitReport(NamedTuple):
    box_lo: np.ndarray
    box_hi: np.ndarray
    checkpoints: np.ndarray
    fraction: np.ndarray
    ci: list
    first_hit: np.ndarray


def separation_box_hit(spec: MapSpec, d: int, eta: float, N: int, samples: int, seed: int = 0,
                       checkpoints=None) -> BoxHitReport:
    """Fraction of uniform (d-1)-tuples of Y^{d-1} that enter the separation box by step n."""
    lo, hi = separation_box(d, eta)
    cps = np.asarray(sorted(checkpoints or [max(1, N // 2), N]), dtype=np.int64)
    counts, first = _box_hits(np.uint64(seed), d - 1, int(N), lo, hi, cps, int(samples),
                              spec.code, spec.alpha, spec.beta)
    frac = counts / samples
    ci = [wilson_interval(c, samples) for c in counts]
    return BoxHitReport(lo, hi, cps, frac, ci, first)
