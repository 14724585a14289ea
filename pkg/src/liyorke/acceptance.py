"""Acceptance suite: one function per criterion, each returning a :class:`CriterionResult`.

Every criterion takes ``scale`` (1.0 = the stated sizes; smaller values shrink
horizons and sample counts for smoke and reproducibility runs, where the
verdict is meaningless but the data must still be bitwise stable) and
``seed``.  Data tables go to CSV; wall-clock times only to JSON.

Renewal sequences for the conservativity check are cached as ``.npy`` files
under ``$LIYORKE_CACHE`` (default ``~/.cache/liyorke``).
"""

import hashlib
import os
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field

import numpy as np

from .inducing import compute_yn, tail_measure
from .maps import MapSpec
from .renewal import (RenewalSeq, conservativity_index, critical_alpha, tail_exponent_fit,
                      un_montecarlo, un_operator)
from .stats import loglog_fit
from .transfer import (Mesh, build_ulam, exactness_decay, finite_set_decay, invariant_density,
                       refinement_l1)
from .tuples import TupleConfig, expansivity_check, measure_estimate

RENEWAL_M = 2**15


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    summary: str
    seconds: float = 0.0
    budget: float = float("inf")
    measured: dict = field(default_factory=dict)
    tables: dict = field(default_factory=dict)     # name -> (header, rows)

    @property
    def within_budget(self):
        return self.seconds <= self.budget

    def line(self):
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] criterion {self.number:2d} {self.title}: {self.summary} "
                f"({self.seconds:.1f}s, budget {self.budget:g}s)")

    def as_dict(self):
        return {"criterion": self.number, "title": self.title, "passed": bool(self.passed),
                "summary": self.summary, "seconds": self.seconds, "budget": self.budget,
                "within_budget": bool(self.within_budget), "measured": self.measured}


def _n(value, scale, floor=1):
    return max(int(floor), int(round(value * scale)))


def _timed(fn):
    def wrapper(scale=1.0, seed=1):
        t0 = time.perf_counter()
        res = fn(scale, seed)
        res.seconds = time.perf_counter() - t0 - res.measured.pop("_excluded_seconds", 0.0)
        # the time budget is part of the criterion at full scale
        if scale >= 1.0 and not res.within_budget:
            res.passed = False
            res.summary += " [over time budget]"
        return res
    wrapper.__name__ = fn.__name__
    wrapper.__doc__ = fn.__doc__
    return wrapper


# ---------------------------------------------------------------------------
# renewal sequences (shared by criteria 4, 5 and 10)


def _cache_dir():
    d = os.environ.get("LIYORKE_CACHE") or os.path.join(os.path.expanduser("~"), ".cache", "liyorke")
    os.makedirs(d, exist_ok=True)
    return d


def renewal_operator(alpha, M=RENEWAL_M):
    spec = MapSpec.manpom(alpha)
    return build_ulam(spec, Mesh.for_map(spec, M, 1.0 + alpha))


def cached_renewal(alpha, N, M=RENEWAL_M, use_cache=True):
    """Operator ``u_n`` for n <= N, stored on disk between runs."""
    path = os.path.join(_cache_dir(), f"un_a{alpha!r}_M{M}_N{N}.npy")
    if use_cache and os.path.exists(path):
        return RenewalSeq(np.load(path), "operator")
    u = un_operator(renewal_operator(alpha, M), N)
    if use_cache:
        np.save(path, u.u)
    return u


# ---------------------------------------------------------------------------
# criteria


@_timed
def criterion_1(scale, seed):
    """Exponent of the preimage sequence y_n."""
    n_max = _n(10**5, scale, 200)
    rows, ok, parts = [], True, []
    for a in (1.5, 2.0, 4.0):
        rs = compute_yn(MapSpec.manpom(a), n_max)
        fit = loglog_fit(np.arange(n_max + 1), rs.y, (100, n_max))
        good = abs(fit.slope + 1 / a) <= 0.02
        ok &= good
        rows.append((a, fit.slope, -1 / a, fit.r2, good))
        parts.append(f"a={a}: {fit.slope:.4f} vs {-1 / a:.4f}")
    return CriterionResult(1, "preimage-sequence exponent", ok, "; ".join(parts), budget=10,
                           measured={"slopes": {r[0]: r[1] for r in rows}},
                           tables={"c01_yn_slopes": (["alpha", "slope", "target", "r2", "ok"], rows)})


@_timed
def criterion_2(scale, seed):
    """Return-time tail: exact identity, tail exponent, and sum of n lambda(tau = n)."""
    n_max = _n(10**5, scale, 200)
    ok = True
    parts, rows = [], []
    worst_identity = 0.0
    for a in (0.5, 2.0):
        spec = MapSpec.manpom(a)
        rs = compute_yn(spec, n_max)
        rep = tail_measure(spec, n_max, (100, max(n_max // 10, 101)), structure=rs)
        # lambda(tau >= n + 2) from the cylinder lengths [y'_k, y'_{k-1}), against y_n / 2
        m = min(1000, n_max - 2)
        cyl = rs.cylinder_hi - rs.cylinder_lo             # tau = 1 .. n_max
        above = 0.5 - np.cumsum(cyl)                      # lambda(tau >= k + 2) at index k
        lhs = above[:m + 1]                               # n = 0..m
        err = float(np.max(np.abs(lhs - 0.5 * rs.y[:m + 1])))
        worst_identity = max(worst_identity, err)
        slope_ok = abs(rep.fit.slope + 1 / a) <= 0.05
        want = "Convergent" if a < 1 else "Divergent"
        diag_ok = rep.diagnosis == want
        ok &= slope_ok and diag_ok and err <= 1e-12
        rows.append((a, err, rep.fit.slope, -1 / a, rep.increment, rep.diagnosis, want))
        parts.append(f"a={a}: identity err {err:.1e}, tail slope {rep.fit.slope:.4f}, "
                     f"sum n*lambda {rep.diagnosis} (increment {rep.increment:.2e})")
    return CriterionResult(2, "return-time tail", ok, "; ".join(parts), budget=30,
                           measured={"identity_error": worst_identity},
                           tables={"c02_tail": (["alpha", "identity_error", "tail_slope", "target",
                                                 "increment", "diagnosis", "expected"], rows)})


@_timed
def criterion_3(scale, seed):
    """Invariant densities: exact doubling, boundedness of h(x) x^0.5, refinement stability."""
    # doubling on a dyadic mesh
    M_d = _n(2**10, scale, 16)
    M_d = 1 << (M_d.bit_length() - 1)
    dbl = MapSpec.doubling()
    hd = invariant_density(build_ulam(dbl, Mesh.graded(M_d, 1.0)), method="power")
    dev = float(np.max(np.abs(hd.h - 1.0)))
    # alpha = 0.5
    M = 1 << max(8, int(round(14 + np.log2(max(scale, 2**-6)))))
    spec = MapSpec.manpom(0.5)
    fine = invariant_density(build_ulam(spec, Mesh.for_map(spec, M)))
    coarse = invariant_density(build_ulam(spec, Mesh.for_map(spec, M // 2)))
    ratio, wmin, wmax = fine.bound_ratio(0.5, 1e-4)
    l1 = refinement_l1(coarse, fine, lo=1e-4)
    ok = dev == 0.0 and ratio <= 50 and l1 <= 0.05
    summary = (f"doubling max|h-1| = {dev:.1e} (M={M_d}); a=0.5 sup/inf h*x^0.5 = {ratio:.3f} "
               f"(M={M}); refinement L1 = {l1:.4f}")
    rows = [(float(x), float(h), float(w)) for x, h, w in
            zip(fine.mesh.mids, fine.h, fine.weighted(0.5))]
    return CriterionResult(3, "invariant density", ok, summary, budget=120,
                           measured={"doubling_dev": dev, "ratio": ratio, "refinement_l1": l1},
                           tables={"c03_density": (["cell_mid", "h", "h_times_x_alpha"], rows)})


@_timed
def criterion_4(scale, seed):
    """Renewal exponent by the operator route, checked against Monte Carlo."""
    N = _n(10**4, scale, 200)
    samples = _n(10**6, scale, 1000)
    n_mc = _n(1000, scale, 20)
    ok, parts, rows, zrows = True, [], [], []
    for a in (1.5, 2.0, 3.0, 4.0):
        u = un_operator(renewal_operator(a, RENEWAL_M if scale >= 1 else 2**12), N)
        fit = tail_exponent_fit(u, (100, N))
        mc = un_montecarlo(MapSpec.manpom(a), n_mc, samples, seed)
        se = mc.stderr[1:]
        z = np.where(se > 0, (mc.u[1:] - u.u[1:n_mc + 1]) / np.where(se > 0, se, 1.0), 0.0)
        zmax = float(np.max(np.abs(z)))
        exact = u.u[0] == 0.5 and u.u[1] == 0.25
        good = abs(fit.slope - (1 / a - 1)) <= 0.1 and exact and zmax <= 4.0
        ok &= good
        rows.append((a, fit.slope, 1 / a - 1, u.u[0], u.u[1], zmax, good))
        zrows += [(a, n + 1, u.u[n + 1], mc.u[n + 1], mc.stderr[n + 1]) for n in range(n_mc)]
        parts.append(f"a={a}: slope {fit.slope:.4f} vs {1 / a - 1:.4f}, max|z| {zmax:.2f}")
    return CriterionResult(4, "renewal exponent", ok, "; ".join(parts), budget=4 * 300,
                           measured={"rows": rows},
                           tables={"c04_slopes": (["alpha", "slope", "target", "u0", "u1", "max_abs_z",
                                                   "ok"], rows),
                                   "c04_mc": (["alpha", "n", "u_operator", "u_mc", "stderr"], zrows)})


C5_ROWS = [(2, 1.5, "Divergent"), (3, 1.3, "Divergent"), (2, 3.0, "Convergent"),
           (3, 2.5, "Convergent"), (2, 2.0, "critical"), (3, 1.5, "critical")]


@_timed
def criterion_5(scale, seed):
    """Conservativity verdicts from stored renewal sequences."""
    N = _n(10**6, scale, 1000)
    full = scale >= 1
    t_gen = 0.0
    seqs = {}
    for a in sorted({r[1] for r in C5_ROWS}):
        t0 = time.perf_counter()
        seqs[a] = (cached_renewal(a, N) if full
                   else un_operator(renewal_operator(a, 2**12), N))
        t_gen += time.perf_counter() - t0
    ok, parts, rows = True, [], []
    for d, a, want in C5_ROWS:
        rep = conservativity_index(seqs[a], d)
        good = rep.verdict == want if want != "critical" else True
        ok &= good
        rows.append((d, a, critical_alpha(d), rep.increment, rep.exponent, rep.remainder,
                     rep.verdict, want))
        parts.append(f"d={d} a={a}: {rep.verdict} (inc {rep.increment:.2e})")
    return CriterionResult(5, "conservativity verdicts", ok, "; ".join(parts) + f" [N={N}]",
                           budget=60, measured={"generation_seconds": t_gen,
                                                "_excluded_seconds": t_gen},
                           tables={"c05_verdicts": (["d", "alpha", "alpha_star", "increment",
                                                     "exponent", "remainder", "verdict",
                                                     "expected"], rows)})


@_timed
def criterion_6(scale, seed):
    """Expansivity rho(Tx, Ty) >= rho(x, y) for pairs with rho <= 1/3."""
    trials = _n(10**6, scale, 1000)
    ok, parts, rows = True, [], []
    for a in (1.0, 1.5, 2.0, 4.0):
        rep = expansivity_check(MapSpec.manpom(a), trials, seed)
        ok &= rep.violations == 0
        rows.append((a, rep.trials, rep.violations, rep.straddling_violations, rep.excluded,
                     rep.min_ratio, rep.min_ratio_same_branch))
        parts.append(f"a={a}: {rep.violations} violations ({rep.straddling_violations} across 1/2), "
                     f"min same-branch ratio {rep.min_ratio_same_branch:.4f}")
    return CriterionResult(6, "expansivity", ok, "; ".join(parts), budget=10,
                           tables={"c06_expansivity": (["alpha", "trials", "violations",
                                                        "straddling", "excluded", "min_ratio",
                                                        "min_ratio_same_branch"], rows)})


def _row_tuple(r):
    d = r.as_dict()
    return [d[k] for k in d]


def _row_header(r):
    return list(r.as_dict())


@_timed
def criterion_7(scale, seed):
    """Pairs are 1/3-Li-Yorke at alpha = 2.5."""
    N = _n(10**6, scale, 100)
    est = measure_estimate(TupleConfig(MapSpec.manpom(2.5), 2, N, 0.3, 1e-3, 0, seed),
                           _n(500, scale, 100), horizons=[max(1, N // 10), N])
    r5, r6 = est.rows
    ok = r6.frac_LY >= 0.95 and r6.frac_LY >= r5.frac_LY
    summary = (f"frac_LY {r5.frac_LY:.3f} (N={r5.N}) -> {r6.frac_LY:.3f} (N={r6.N}), "
               f"Wilson 95% [{r6.ci_LY[0]:.3f}, {r6.ci_LY[1]:.3f}]; "
               f"proximal {r6.frac_proximal:.3f}, separated {r6.frac_separated:.3f}")
    return CriterionResult(7, "pairs 1/3-LY", ok, summary, budget=300,
                           tables={"c07_pairs": (_row_header(r6), [_row_tuple(r) for r in est.rows])})


@_timed
def criterion_8(scale, seed):
    """Phase transition for triples."""
    N = _n(10**6, scale, 100)
    samples = _n(500, scale, 100)
    hz = [max(1, N // 10), N]
    lo = measure_estimate(TupleConfig(MapSpec.manpom(1.2), 3, N, 0.2, 1e-3, 0, seed),
                          samples, horizons=hz, row_index=0)
    hi = measure_estimate(TupleConfig(MapSpec.manpom(2.5), 3, N, 0.2, 1e-3, 0, seed),
                          samples, horizons=hz, eps_late=0.05, row_index=1)
    a5, a6 = lo.rows
    b5, b6 = hi.rows
    ok_lo = a6.frac_LY >= 0.85 and a6.frac_LY >= a5.frac_LY
    ok_hi = b6.frac_late_separated <= 0.15 and b6.frac_late_separated <= b5.frac_late_separated
    summary = (f"a=1.2: frac_LY {a5.frac_LY:.3f} -> {a6.frac_LY:.3f}; a=2.5: late-separated "
               f"(>0.05) {b5.frac_late_separated:.3f} -> {b6.frac_late_separated:.3f}")
    rows = [_row_tuple(r) for r in lo.rows + hi.rows]
    return CriterionResult(8, "phase transition at d=3", ok_lo and ok_hi, summary, budget=900,
                           tables={"c08_triples": (_row_header(a6), rows)})


@_timed
def criterion_9(scale, seed):
    """Full-measure Li-Yorke tuples for the doubling map."""
    N = _n(10**4, scale, 100)
    samples = _n(1000, scale, 100)
    ok, parts, rows = True, [], []
    for k, d in enumerate((2, 3, 4)):
        est = measure_estimate(TupleConfig(MapSpec.doubling(), d, N, 0.1, 1e-3, 0, seed),
                               samples, horizons=[N], row_index=k)
        r = est.final
        ok &= r.frac_LY >= 0.99
        rows.append(_row_tuple(r))
        parts.append(f"d={d}: frac_LY {r.frac_LY:.3f} (proximal {r.frac_proximal:.3f})")
    return CriterionResult(9, "doubling full measure", ok, "; ".join(parts), budget=60,
                           tables={"c09_doubling": (_row_header(est.final), rows)})


@_timed
def criterion_10(scale, seed):
    """Exactness of the doubling map and decay of the mass on Y for alpha = 2."""
    dbl = MapSpec.doubling()
    mesh = Mesh.graded(1024, 1.0)
    op = build_ulam(dbl, mesh)
    f = np.where(mesh.mids < 0.5, 1.0, -1.0)
    dec = exactness_decay(op, f, 2)
    N = _n(10**4, scale, 200)
    op2 = renewal_operator(2.0, RENEWAL_M if scale >= 1 else 2**12)
    mass = finite_set_decay(op2, (0.5, 1.0), np.ones(op2.M), N)
    fit = loglog_fit(np.arange(N + 1), mass, (100, N))
    ok = dec[1] == 0.0 and abs(fit.slope + 0.5) <= 0.15
    summary = (f"doubling ||L f||_1 after one step = {dec[1]:.1e}; a=2 decay exponent "
               f"{fit.slope:.4f} vs -0.5")
    rows = [(n, float(mass[n])) for n in range(N + 1)]
    return CriterionResult(10, "exactness and decay", ok, summary, budget=300,
                           measured={"doubling_L1": float(dec[1]), "slope": fit.slope},
                           tables={"c10_decay": (["n", "mass_on_Y"], rows)})


REPRO_SCALE = 0.002
REPRO_WORKERS = (1, 4, 8)


def _digest_dir(path):
    out = {}
    for name in sorted(os.listdir(path)):
        if name.endswith(".csv"):
            with open(os.path.join(path, name), "rb") as fh:
                out[name] = hashlib.sha256(fh.read()).hexdigest()
    return out


@_timed
def criterion_11(scale, seed):
    """Bitwise-identical CSVs of criteria 1-10 across worker counts 1, 4 and 8."""
    env = dict(os.environ, NUMBA_NUM_THREADS=str(max(REPRO_WORKERS)))
    digests = {}
    with tempfile.TemporaryDirectory() as tmp:
        for w in REPRO_WORKERS:
            out = os.path.join(tmp, f"w{w}")
            cmd = [sys.executable, "-m", "liyorke", "accept", "--only", "1,2,3,4,5,6,7,8,9,10",
                   "--scale", repr(REPRO_SCALE * scale), "--seed", str(seed),
                   "--workers", str(w), "--out", out]
            proc = subprocess.run(cmd, env=env, capture_output=True, text=True)
            if not os.path.isdir(out):
                return CriterionResult(11, "reproducibility", False,
                                       f"run with {w} workers failed: {proc.stderr[-500:]}")
            digests[w] = _digest_dir(out)
    ref = digests[REPRO_WORKERS[0]]
    same = all(digests[w] == ref for w in REPRO_WORKERS) and len(ref) > 0
    rows = [(w, name, h) for w in REPRO_WORKERS for name, h in sorted(digests[w].items())]
    summary = (f"{len(ref)} CSV files, workers {REPRO_WORKERS}: "
               + ("identical" if same else "DIFFER") + f" (scale {REPRO_SCALE * scale:g})")
    return CriterionResult(11, "reproducibility", same, summary, budget=float("inf"),
                           tables={"c11_digests": (["workers", "file", "sha256"], rows)})


CRITERIA = {i: globals()[f"criterion_{i}"] for i in range(1, 12)}


def run_suite(only=None, seed=1, echo=False, scale=1.0, out=None):
    """Run the selected criteria (default all); optionally write their CSV tables to ``out``."""
    from .cli import write_csv
    results = []
    for i in sorted(only or CRITERIA):
        if i not in CRITERIA:
            raise ValueError(f"no criterion {i}")
        res = CRITERIA[i](scale, seed)
        if out is not None:
            for name, (header, rows) in res.tables.items():
                write_csv(os.path.join(out, name + ".csv"), header, rows)
        if echo:
            print(res.line(), flush=True)
        results.append(res)
    return results
