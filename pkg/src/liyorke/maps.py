"""Interval maps: Manneville-Pomeau, its two-neutral-point variant, doubling.

A map is described by an immutable :class:`MapSpec`.  Built-in maps have
closed-form branches, derivatives and inverse branches, plus a compiled
single-step kernel (:func:`step`) used by the long-orbit simulations.
Arbitrary piecewise monotone maps can be assembled from :class:`Branch`
objects; they support evaluation and transfer-operator construction but not
the compiled kernels.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numba as nb
import numpy as np

from .errors import DomainError, NonConvergence

DOMAIN_TOL = 1e-12

# kernel codes
MANPOM = 0
MANPOM_TWO = 1
DOUBLING = 2
CUSTOM = 3

INTERVAL = 0
CIRCLE = 1


@dataclass(frozen=True)
class Branch:
    """One monotone C^1 piece of a map, defined on ``[lo, hi)``.

    ``func``, ``deriv`` and (optionally) ``inverse`` must accept numpy arrays.
    Without an inverse, preimages are found by bisection.
    """

    lo: float
    hi: float
    func: Callable
    deriv: Callable
    inverse: Optional[Callable] = None
    name: str = "custom"
    # t - inverse(t) without cancellation, for branches tangent to the diagonal
    gap: Optional[Callable] = None

    @property
    def increasing(self) -> bool:
        return float(self.func(np.array([self.hi]))[0]) >= float(self.func(np.array([self.lo]))[0])

    def image(self):
        """Closure of the image interval, as (low, high)."""
        ends = self.func(np.array([self.lo, self.hi], dtype=float))
        return float(min(ends)), float(max(ends))


@dataclass(frozen=True)
class MapSpec:
    kind: str
    alpha: float = 0.0
    beta: float = 0.0
    metric: str = "interval"
    custom: tuple = field(default=(), compare=False)

    def __post_init__(self):
        if self.kind not in ("manpom", "manpom2", "doubling", "custom"):
            raise ValueError(f"unknown map kind {self.kind!r}")
        if self.metric not in ("interval", "circle"):
            raise ValueError(f"unknown metric {self.metric!r}")
        if self.kind in ("manpom", "manpom2") and not self.alpha > 0:
            raise ValueError("alpha must be positive")
        if self.kind == "manpom2" and not self.beta > 0:
            raise ValueError("beta must be positive")
        if self.kind == "custom":
            _check_partition(self.custom)

    @classmethod
    def manpom(cls, alpha, metric="interval"):
        return cls("manpom", alpha=float(alpha), metric=metric)

    @classmethod
    def manpom_two(cls, alpha, beta, metric="interval"):
        return cls("manpom2", alpha=float(alpha), beta=float(beta), metric=metric)

    @classmethod
    def doubling(cls, metric="interval"):
        return cls("doubling", metric=metric)

    @classmethod
    def from_branches(cls, branches: Sequence[Branch], metric="interval"):
        return cls("custom", metric=metric, custom=tuple(branches))

    @classmethod
    def from_config(cls, cfg):
        """Build from a flat mapping such as ``{"map": "manpom", "alpha": 2}``."""
        name = str(cfg.get("map", "manpom")).lower()
        metric = cfg.get("metric", "interval")
        if name == "manpom":
            return cls.manpom(cfg["alpha"], metric)
        if name in ("manpom2", "manpom_two"):
            return cls.manpom_two(cfg["alpha"], cfg["beta"], metric)
        if name == "doubling":
            return cls.doubling(metric)
        raise ValueError(f"unknown map {name!r}; expected manpom, manpom2 or doubling")

    @classmethod
    def parse(cls, text):
        """Parse ``"map=manpom alpha=2.0 metric=interval"``."""
        cfg = {}
        for tok in text.split():
            key, _, val = tok.partition("=")
            cfg[key] = val if key in ("map", "metric") else float(val)
        return cls.from_config(cfg)

    @property
    def code(self):
        return {"manpom": MANPOM, "manpom2": MANPOM_TWO, "doubling": DOUBLING, "custom": CUSTOM}[self.kind]

    @property
    def metric_code(self):
        return CIRCLE if self.metric == "circle" else INTERVAL

    @property
    def branches(self):
        if self.kind == "custom":
            return self.custom
        return _builtin_branches(self.kind, self.alpha, self.beta)

    def __call__(self, x):
        return evaluate(self, x)

    def describe(self):
        if self.kind == "manpom":
            return f"map=manpom alpha={self.alpha!r} metric={self.metric}"
        if self.kind == "manpom2":
            return f"map=manpom2 alpha={self.alpha!r} beta={self.beta!r} metric={self.metric}"
        return f"map={self.kind} metric={self.metric}"


def _check_partition(branches):
    if not branches:
        raise ValueError("custom map needs at least one branch")
    if branches[0].lo != 0.0 or branches[-1].hi != 1.0:
        raise ValueError("branches must cover [0, 1]")
    for left, right in zip(branches, branches[1:]):
        if left.hi != right.lo:
            raise ValueError("branches must be contiguous and ordered")
    for br in branches:
        if not br.lo < br.hi:
            raise ValueError("empty branch domain")
        lo, hi = br.image()
        if lo < -DOMAIN_TOL or hi > 1 + DOMAIN_TOL:
            raise ValueError(f"branch {br.name} maps outside [0, 1]")


# ---------------------------------------------------------------------------
# closed forms


def _left_mp(alpha):
    def f(x):
        x = np.asarray(x, dtype=float)
        return x + x * (2.0 * x) ** alpha

    def df(x):
        x = np.asarray(x, dtype=float)
        return 1.0 + (1.0 + alpha) * (2.0 * x) ** alpha

    def inv(t):
        return left_inverse(t, alpha)

    def gap(t):
        g = left_inverse(t, alpha)
        return g * (2.0 * g) ** alpha

    return f, df, inv, gap


def _builtin_branches(kind, alpha, beta):
    if kind == "doubling":
        return (
            Branch(0.0, 0.5, lambda x: 2.0 * np.asarray(x, float), lambda x: np.full(np.shape(x), 2.0),
                   lambda t: 0.5 * np.asarray(t, float), "2x"),
            Branch(0.5, 1.0, lambda x: 2.0 * np.asarray(x, float) - 1.0, lambda x: np.full(np.shape(x), 2.0),
                   lambda t: 0.5 * (1.0 + np.asarray(t, float)), "2x-1"),
        )
    f, df, inv, gap = _left_mp(alpha)
    left = Branch(0.0, 0.5, f, df, inv, "x+x(2x)^a", gap)
    if kind == "manpom":
        right = Branch(0.5, 1.0, lambda x: 2.0 * np.asarray(x, float) - 1.0,
                       lambda x: np.full(np.shape(x), 2.0),
                       lambda t: 0.5 * (1.0 + np.asarray(t, float)), "2x-1")
        return left, right
    fb, dfb, invb, _ = _left_mp(beta)
    right = Branch(
        0.5, 1.0,
        lambda x: 1.0 - fb(1.0 - np.asarray(x, float)),
        lambda x: dfb(1.0 - np.asarray(x, float)),
        lambda t: 1.0 - invb(1.0 - np.asarray(t, float)),
        "x-(1-x)(2(1-x))^b",
    )
    return left, right


@nb.njit(cache=True)
def _left_inverse_scalar(t, alpha):
    # solve g(x) = x + x (2x)^alpha - t = 0 on [0, 1/2]; g is increasing and
    # convex, so Newton started at the upper bracket end decreases monotonically
    if t <= 0.0:
        return 0.0
    hi = min(t, 0.5)
    lo = t / (1.0 + (2.0 * hi) ** alpha)
    x = hi
    for _ in range(100):
        g = x + x * (2.0 * x) ** alpha - t
        if g <= 0.0:
            return x
        dx = g / (1.0 + (1.0 + alpha) * (2.0 * x) ** alpha)
        if dx <= 2.2e-16 * x:
            return x - dx if x - dx >= lo else x
        x -= dx
    # fallback: bisection on the original bracket
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid + mid * (2.0 * mid) ** alpha < t:
            lo = mid
        else:
            hi = mid
        if hi - lo <= 1e-16 * hi:
            break
    return 0.5 * (lo + hi)


@nb.njit(cache=True)
def _left_inverse_array(t, alpha):
    out = np.empty(t.shape[0])
    for i in range(t.shape[0]):
        out[i] = _left_inverse_scalar(t[i], alpha)
    return out


def left_inverse(t, alpha):
    """Preimage of ``t`` under the left branch ``x + x (2x)^alpha``.

    Newton iteration from ``min(t, 1/2)``; the branch is increasing and convex
    so the iterates decrease monotonically onto the root.  Falls back to
    bisection on ``[t / (1 + (2 min(t, 1/2))^alpha), min(t, 1/2)]``.
    """
    arr = np.asarray(t, dtype=float)
    if np.any(arr > 1.0 + DOMAIN_TOL) or np.any(arr < -DOMAIN_TOL):
        raise DomainError("left_inverse argument outside [0, 1]")
    res = _left_inverse_array(np.clip(arr.ravel(), 0.0, 1.0), float(alpha)).reshape(arr.shape)
    if not np.all(np.isfinite(res)):
        raise NonConvergence("left-branch inverse produced non-finite values")
    return res if res.ndim else float(res)


# ---------------------------------------------------------------------------
# evaluation


def _as_unit(x):
    arr = np.asarray(x, dtype=float)
    if np.any(arr < -DOMAIN_TOL) or np.any(arr > 1 + DOMAIN_TOL) or np.any(np.isnan(arr)):
        raise DomainError(f"point outside [0, 1]: {x!r}")
    return np.clip(arr, 0.0, 1.0)


def branch_of(spec: MapSpec, x):
    """Index of the branch whose domain contains ``x`` (1/2 is on the right)."""
    arr = _as_unit(x)
    los = np.array([b.lo for b in spec.branches])
    idx = np.searchsorted(los, arr, side="right") - 1
    return idx if idx.ndim else int(idx)


def evaluate(spec: MapSpec, x):
    """T(x), clamped to [0, 1].  Works on scalars and arrays."""
    arr = _as_unit(x)
    if spec.kind != "custom":
        out = _step_array(np.atleast_1d(arr).ravel(), spec.code, spec.alpha, spec.beta).reshape(arr.shape)
        return out if out.ndim else float(out)
    idx = np.atleast_1d(branch_of(spec, arr))
    flat = np.atleast_1d(arr).ravel()
    out = np.empty_like(flat)
    for k, br in enumerate(spec.branches):
        sel = idx.ravel() == k
        if sel.any():
            out[sel] = br.func(flat[sel])
    out = np.clip(out, 0.0, 1.0).reshape(arr.shape)
    return out if out.ndim else float(out)


def derivative(spec: MapSpec, x):
    """Closed-form T'(x) on the branch containing ``x``."""
    arr = _as_unit(x)
    idx = np.atleast_1d(branch_of(spec, arr)).ravel()
    flat = np.atleast_1d(arr).ravel()
    out = np.empty_like(flat)
    for k, br in enumerate(spec.branches):
        sel = idx == k
        if sel.any():
            out[sel] = br.deriv(flat[sel])
    out = out.reshape(arr.shape)
    return out if out.ndim else float(out)


def eval_n(spec: MapSpec, x, n, window=None):
    """Orbit ``[x, T x, ..., T^n x]``.

    With ``window`` set, only the last ``window`` points are kept (for very
    long orbits); the returned array then ends at ``T^n x``.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    x = float(_as_unit(x))
    if spec.kind != "custom":
        if window is None:
            return _orbit(x, n, spec.code, spec.alpha, spec.beta)
        return _orbit_tail(x, n, min(int(window), n + 1), spec.code, spec.alpha, spec.beta)
    keep = n + 1 if window is None else min(window, n + 1)
    buf = np.empty(keep)
    cur = x
    for k in range(n + 1):
        if k >= n + 1 - keep:
            buf[k - (n + 1 - keep)] = cur
        if k < n:
            cur = evaluate(spec, cur)
    return buf


def dist(spec_or_metric, x, y):
    """Interval distance ``|x-y|`` or circle distance ``min(|x-y|, 1-|x-y|)``."""
    metric = spec_or_metric.metric if isinstance(spec_or_metric, MapSpec) else spec_or_metric
    d = np.abs(np.asarray(x, float) - np.asarray(y, float))
    if metric == "circle":
        d = np.minimum(d, 1.0 - d)
    return d if d.ndim else float(d)


# ---------------------------------------------------------------------------
# compiled kernels


@nb.njit(cache=True, inline="always")
def step(x, kind, alpha, beta):
    """One application of a built-in map (kernel codes MANPOM, MANPOM_TWO, DOUBLING)."""
    if x < 0.5:
        if kind == DOUBLING:
            y = 2.0 * x
        else:
            y = x + x * (2.0 * x) ** alpha
    else:
        if kind == MANPOM_TWO:
            s = 1.0 - x
            y = x - s * (2.0 * s) ** beta
        else:
            y = 2.0 * x - 1.0
    if y > 1.0:
        y = 1.0
    elif y < 0.0:
        y = 0.0
    return y


@nb.njit(cache=True, inline="always")
def step_deriv(x, kind, alpha, beta):
    if x < 0.5:
        if kind == DOUBLING:
            return 2.0
        return 1.0 + (1.0 + alpha) * (2.0 * x) ** alpha
    if kind == MANPOM_TWO:
        return 1.0 + (1.0 + beta) * (2.0 * (1.0 - x)) ** beta
    return 2.0


@nb.njit(cache=True, inline="always")
def metric_dist(x, y, metric):
    d = abs(x - y)
    if metric == CIRCLE and d > 0.5:
        d = 1.0 - d
    return d


@nb.njit(cache=True)
def _step_array(x, kind, alpha, beta):
    out = np.empty_like(x)
    for i in range(x.shape[0]):
        out[i] = step(x[i], kind, alpha, beta)
    return out


@nb.njit(cache=True)
def _orbit(x, n, kind, alpha, beta):
    out = np.empty(n + 1)
    out[0] = x
    for k in range(n):
        x = step(x, kind, alpha, beta)
        out[k + 1] = x
    return out


@nb.njit(cache=True)
def _orbit_tail(x, n, keep, kind, alpha, beta):
    # ring buffer of the last ``keep`` points, unrolled in order at the end
    buf = np.empty(keep)
    for k in range(n + 1):
        if k > 0:
            x = step(x, kind, alpha, beta)
        buf[k % keep] = x
    start = (n + 1) % keep
    out = np.empty(keep)
    for j in range(keep):
        out[j] = buf[(start + j) % keep]
    return out
