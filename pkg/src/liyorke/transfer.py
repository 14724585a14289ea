"""Ulam discretisation of the Perron-Frobenius operator.

Cells are ``A_i = [t_i, t_{i+1})``.  The Ulam matrix is

    P[i, j] = lambda(A_i ∩ T^{-1} A_j) / lambda(A_i),

computed from exact preimages of the mesh points under each branch, so every
row sums to one up to rounding.  Densities are stored per cell; internally the
operator acts on cell masses ``m_i = h_i lambda(A_i)`` through ``m -> P^T m``.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import MeshMisaligned, NonConvergence
from .maps import Branch, MapSpec, evaluate

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Mesh:
    t: np.ndarray
    gamma: float = 1.0

    def __post_init__(self):
        t = self.t
        if t.ndim != 1 or len(t) < 3:
            raise ValueError("mesh needs at least two cells")
        if t[0] != 0.0 or t[-1] != 1.0 or not np.all(np.diff(t) > 0):
            raise ValueError("mesh boundaries must increase strictly from 0 to 1")

    @classmethod
    def graded(cls, M, gamma=1.0, extra=()):
        """``t_i = (i/M)^gamma`` plus any ``extra`` boundaries.

        Graded points closer than 1e-3 of a local cell width to an extra point
        are dropped so that no sliver cells appear.
        """
        if M < 2:
            raise ValueError("M must be >= 2")
        t = (np.arange(M + 1) / M) ** gamma
        t[-1] = 1.0
        extra = np.asarray([e for e in extra if 0.0 < e < 1.0], dtype=float)
        if extra.size:
            keep = np.ones(len(t), dtype=bool)
            pos = np.searchsorted(t, extra)
            for e, p in zip(extra, pos):
                for q in (p - 1, p):
                    if 0 < q < M:
                        width = t[q + 1] - t[q - 1]
                        if abs(t[q] - e) < 1e-3 * width and t[q] != e:
                            keep[q] = False
            t = np.union1d(t[keep], extra)
        return cls(t, float(gamma))

    @classmethod
    def for_map(cls, spec, M, gamma=None, yn_depth=64):
        """Graded mesh with boundaries at 1/2, 3/4 and ``y_1..y_yn_depth``."""
        if gamma is None:
            gamma = max(2.0, 1.0 + spec.alpha) if spec.kind in ("manpom", "manpom2") else 1.0
        extra = [0.5]
        if spec.kind == "manpom":
            from .inducing import compute_yn
            extra.append(0.75)
            extra.extend(compute_yn(spec, yn_depth).y[1:])
        return cls.graded(M, gamma, extra)

    @property
    def M(self):
        return len(self.t) - 1

    @property
    def widths(self):
        return np.diff(self.t)

    @property
    def mids(self):
        return 0.5 * (self.t[:-1] + self.t[1:])

    def cell_of(self, x):
        return np.clip(np.searchsorted(self.t, x, side="right") - 1, 0, self.M - 1)

    def has_boundary(self, x):
        k = np.searchsorted(self.t, x)
        return k < len(self.t) and self.t[k] == x

    def cells_in(self, lo, hi):
        """Boolean mask of cells contained in ``[lo, hi]``."""
        return (self.t[:-1] >= lo) & (self.t[1:] <= hi)


@dataclass(frozen=True)
class UlamOperator:
    mesh: Mesh
    P: sp.csr_matrix
    PT: sp.csr_matrix = field(repr=False)
    spec: MapSpec = None

    @property
    def M(self):
        return self.mesh.M

    def row_sums(self):
        return np.asarray(self.P.sum(axis=1)).ravel()

    def push_mass(self, m):
        return self.PT @ m


def _generic_inverse(branch: Branch, t):
    # bisection for a monotone branch without closed-form inverse
    t = np.asarray(t, dtype=float)
    lo = np.full(t.shape, branch.lo)
    hi = np.full(t.shape, branch.hi)
    inc = branch.increasing
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        below = branch.func(mid) < t
        if not inc:
            below = ~below
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    return 0.5 * (lo + hi)


def _branch_segments(branch: Branch, t):
    """Overlaps ``lambda(branch domain ∩ A_i ∩ T^{-1} A_j)`` as arrays (i, j, length).

    Cut points are kept as ``anchor - offset``: mesh points have offset 0 and
    the preimage of ``t_j`` has anchor ``t_j`` and offset ``t_j - T^{-1}(t_j)``.
    Near a neutral fixed point that offset is far below one ulp of ``t_j``, so
    short segments are measured from anchors and offsets rather than by
    subtracting nearly equal floats.
    """
    c, d = branch.lo, branch.hi
    img_lo, img_hi = branch.image()
    inc = branch.increasing
    j_inner = np.nonzero((t > img_lo) & (t < img_hi))[0]
    inner = t[j_inner]
    inv = branch.inverse if branch.inverse is not None else (lambda s: _generic_inverse(branch, s))
    pre = np.asarray(inv(inner), dtype=float) if inner.size else np.empty(0)
    if not np.all(np.isfinite(pre)):
        raise NonConvergence(f"inverse of branch {branch.name} failed")
    pre = np.clip(pre, c, d)
    if branch.gap is not None and inner.size:
        off = np.asarray(branch.gap(inner), dtype=float)
        anchor = inner
    else:
        off = np.zeros_like(pre)
        anchor = pre
    j_dom = np.nonzero((t > c) & (t < d))[0]

    # all cuts: value, anchor, offset, is-preimage, mesh index (target switch)
    value = np.concatenate(([c, d], t[j_dom], pre))
    anc = np.concatenate(([c, d], t[j_dom], anchor))
    offs = np.concatenate(([0.0, 0.0], np.zeros(len(j_dom)), off))
    is_pre = np.concatenate(([False, False], np.zeros(len(j_dom), bool), np.ones(len(pre), bool)))
    idx = np.concatenate(([-1, -1], j_dom, j_inner))
    order = np.lexsort((-offs, value))
    value, anc, offs, is_pre, idx = value[order], anc[order], offs[order], is_pre[order], idx[order]

    direct = np.diff(value)
    via_anchor = (anc[1:] - anc[:-1]) - (offs[1:] - offs[:-1])
    # pick whichever form carries the smaller rounding error
    scale_direct = np.maximum(np.abs(value[1:]), np.abs(value[:-1]))
    scale_anchor = np.maximum.reduce([np.abs(anc[1:]), np.abs(anc[:-1]), offs[1:], offs[:-1]])
    fine = scale_anchor <= scale_direct
    lengths = np.where(fine, via_anchor, direct)

    # domain cell of each segment: the cell holding its left cut (a cut that
    # is a preimage rounded onto a mesh point belongs to the cell below)
    left_val, left_off = value[:-1], offs[:-1]
    i = np.where(left_off > 0,
                 np.searchsorted(t, left_val, side="left") - 1,
                 np.searchsorted(t, left_val, side="right") - 1)
    # target cell switches at each preimage cut
    last_pre = np.maximum.accumulate(np.where(is_pre[:-1], np.arange(len(value) - 1), -1))
    if inc:
        start_cell = np.searchsorted(t, img_lo, side="right") - 1
        j = np.where(last_pre >= 0, idx[np.maximum(last_pre, 0)], start_cell)
    else:
        start_cell = np.searchsorted(t, img_hi, side="left") - 1
        j = np.where(last_pre >= 0, idx[np.maximum(last_pre, 0)] - 1, start_cell)
    keep = (lengths > 0) & (value[1:] > value[:-1]) | ((lengths > 0) & fine)
    i = np.clip(i[keep], 0, len(t) - 2)
    j = np.clip(j[keep], 0, len(t) - 2)
    return i, j, lengths[keep]


def build_ulam(spec: MapSpec, mesh: Mesh) -> UlamOperator:
    t = mesh.t
    rows, cols, vals = [], [], []
    for br in spec.branches:
        i, j, lengths = _branch_segments(br, t)
        rows.append(i)
        cols.append(j)
        vals.append(lengths)
    i = np.concatenate(rows)
    j = np.concatenate(cols)
    v = np.concatenate(vals) / mesh.widths[i]
    P = sp.csr_matrix((v, (i, j)), shape=(mesh.M, mesh.M))
    P.sum_duplicates()
    P.sort_indices()
    rs = np.asarray(P.sum(axis=1)).ravel()
    if np.max(np.abs(rs - 1.0)) > 1e-10:
        raise NonConvergence(f"Ulam rows do not sum to one (max error {np.max(np.abs(rs - 1.0)):.3g})")
    PT = P.T.tocsr()
    PT.sort_indices()
    return UlamOperator(mesh, P, PT, spec)


def transition_frequencies(spec: MapSpec, mesh: Mesh, cell: int, samples: int, seed: int = 0):
    """Empirical ``P[cell, .]`` from uniform samples in the cell (Monte-Carlo oracle)."""
    rng = np.random.Generator(np.random.Philox(key=[seed, cell]))
    a, b = mesh.t[cell], mesh.t[cell + 1]
    x = a + (b - a) * rng.random(samples)
    x = x[x < b]
    targets = mesh.cell_of(evaluate(spec, x))
    return np.bincount(targets, minlength=mesh.M) / len(x), len(x)


# ---------------------------------------------------------------------------
# densities


@dataclass(frozen=True)
class DensityVector:
    mesh: Mesh
    h: np.ndarray
    normalization: str        # "probability" or "pinned"
    iterations: int
    residual: float
    method: str

    @property
    def mass(self):
        return float(np.sum(self.h * self.mesh.widths))

    def weighted(self, alpha):
        """``h(x) x^alpha`` at cell midpoints."""
        return self.h * self.mesh.mids**alpha

    def bound_ratio(self, alpha, lo, hi=1.0):
        """sup / inf of ``h(x) x^alpha`` over midpoints in ``[lo, hi]``."""
        sel = (self.mesh.mids >= lo) & (self.mesh.mids <= hi)
        w = self.weighted(alpha)[sel]
        return float(w.max() / w.min()), float(w.min()), float(w.max())


def infinite_measure(spec: MapSpec):
    if spec.kind == "manpom":
        return spec.alpha >= 1.0
    if spec.kind == "manpom2":
        return max(spec.alpha, spec.beta) >= 1.0
    return False


def _pin_cell(mesh):
    return mesh.M - 1


def _normalise(op, m, pinned):
    w = op.mesh.widths
    if pinned:
        k = _pin_cell(op.mesh)
        return m / (m[k] / w[k])
    return m / m.sum()


def _power(op, m, tol, max_iter, pinned):
    inc_hist = []
    recent = []
    for it in range(1, max_iter + 1):
        new = op.push_mass(m)
        if pinned:
            new = _normalise(op, new, True)
        inc = float(np.abs(new - m).sum() / max(np.abs(new).sum(), 1e-300))
        m = new
        inc_hist.append(inc)
        recent.append(m)
        if len(recent) > 10:
            recent.pop(0)
        if inc < tol:
            return m, it, inc
        # oscillation: increments stop decreasing -> try the Cesaro mean of the last 10
        if it >= 20 and len(recent) == 10 and np.sum(np.diff(inc_hist[-20:]) > 0) >= 5:
            avg = np.mean(recent, axis=0)
            nxt = op.push_mass(avg)
            if pinned:
                nxt = _normalise(op, nxt, True)
            ainc = float(np.abs(nxt - avg).sum() / max(np.abs(nxt).sum(), 1e-300))
            if ainc < tol:
                return avg, it, ainc
    return m, max_iter, inc_hist[-1] if inc_hist else float("inf")


def _direct(op, pinned):
    M = op.M
    # generator I - P^T with the diagonal taken from off-diagonal row sums, so
    # that escape rates far below one ulp of 1 survive
    P = op.P.tocoo()
    off = P.row != P.col
    esc = np.bincount(P.row[off], weights=P.data[off], minlength=M)
    A = (sp.diags(esc) - sp.csr_matrix((P.data[off], (P.col[off], P.row[off])), shape=(M, M))).tolil()
    k = _pin_cell(op.mesh)
    A[k, :] = 0.0
    A[k, k] = 1.0
    rhs = np.zeros(M)
    rhs[k] = op.mesh.widths[k]
    m = spla.spsolve(A.tocsc(), rhs)
    if not np.all(np.isfinite(m)):
        raise NonConvergence("sparse solve for the invariant density failed")
    m = np.maximum(m, 0.0)
    return _normalise(op, m, pinned)


def invariant_density(op: UlamOperator, tol=1e-12, max_iter=10_000, method="auto",
                      normalization=None, polish=20) -> DensityVector:
    """Fixed density of the discretised operator.

    ``method="power"`` iterates from the uniform density (Cesaro-averaging the
    last 10 iterates when the increments oscillate).  ``"direct"`` solves the
    pinned linear system and then applies ``polish`` power steps; ``"auto"``
    tries 200 power steps first and falls back to the direct solve.

    ``normalization`` is ``"probability"`` (total mass one) or ``"pinned"``
    (h = 1 on the rightmost cell, for infinite invariant measures); the
    default picks by map parameters.
    """
    if normalization is None:
        normalization = "pinned" if op.spec is not None and infinite_measure(op.spec) else "probability"
    pinned = normalization == "pinned"
    w = op.mesh.widths
    m0 = _normalise(op, w.copy(), pinned)
    if method in ("power", "auto"):
        budget = max_iter if method == "power" else min(200, max_iter)
        m, its, inc = _power(op, m0, tol, budget, pinned)
        if inc < tol:
            return DensityVector(op.mesh, m / w, normalization, its, inc, "power")
        if method == "power":
            raise NonConvergence(f"power iteration stalled at increment {inc:.3g}", residual=inc)
    m = _direct(op, pinned)
    its = 0
    inc = float("inf")
    for its in range(1, polish + 1):
        new = op.push_mass(m)
        new = _normalise(op, new, pinned)
        inc = float(np.abs(new - m).sum() / np.abs(new).sum())
        m = new
        if inc < tol:
            break
    if not inc < max(tol, 1e-8):
        raise NonConvergence(f"direct solve residual {inc:.3g}", residual=inc)
    return DensityVector(op.mesh, m / w, normalization, its, inc, "direct")


def refinement_l1(coarse: DensityVector, fine: DensityVector, lo=0.01, hi=1.0):
    """Relative L1 distance of two densities on ``[lo, hi]``, on the finer mesh."""
    mids = fine.mesh.mids
    sel = (mids >= lo) & (mids <= hi)
    hc = coarse.h[coarse.mesh.cell_of(mids[sel])]
    hf = fine.h[sel]
    wf = fine.mesh.widths[sel]
    return float(np.sum(np.abs(hf - hc) * wf) / np.sum(hf * wf))


# ---------------------------------------------------------------------------
# iteration diagnostics


def pf_iterate(op: UlamOperator, f, n: int):
    """Per-cell density approximating ``L^n f``."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return np.array(f, dtype=float)
    w = op.mesh.widths
    m = np.asarray(f, dtype=float) * w
    for _ in range(n):
        m = op.push_mass(m)
    return m / w


def exactness_decay(op: UlamOperator, f, n_max: int):
    """``[∫|L^n f| dλ for n = 0..n_max]`` for a zero-mean density ``f``."""
    w = op.mesh.widths
    m = np.asarray(f, dtype=float) * w
    scale = max(np.abs(m).sum(), 1e-300)
    if abs(m.sum()) > 1e-10 * max(scale, 1.0):
        raise ValueError("f must have zero integral")
    out = np.empty(n_max + 1)
    out[0] = np.abs(m).sum()
    for n in range(1, n_max + 1):
        m = op.push_mass(m)
        out[n] = np.abs(m).sum()
    return out


def finite_set_decay(op: UlamOperator, A, f, n_max: int):
    """``[∫_A L^n f dλ for n = 0..n_max]``; ``A`` is a cell mask or an interval ``(lo, hi)``."""
    if isinstance(A, tuple):
        A = op.mesh.cells_in(*A)
    A = np.asarray(A, dtype=bool)
    m = np.asarray(f, dtype=float) * op.mesh.widths
    out = np.empty(n_max + 1)
    out[0] = m[A].sum()
    for n in range(1, n_max + 1):
        m = op.push_mass(m)
        out[n] = m[A].sum()
    return out


def require_half_boundary(mesh: Mesh):
    if not mesh.has_boundary(0.5):
        raise MeshMisaligned("mesh must have a cell boundary at 1/2")
