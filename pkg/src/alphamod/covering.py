"""Frequency coverings: uniform, intermediate (alpha) and dyadic shells.

Pieces are open quasi-norm balls ``B(c, r) = {x : ||c^{-1} * x|| < r}`` or
origin-centred shells.  Pairwise intersection is decided by
:func:`intersect`, which returns a certified ``yes`` (with a witness point),
a certified ``no`` (with a positive separation margin) or ``unknown``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize
from scipy.spatial import cKDTree

from ._errors import (
    AlphaOutOfRange,
    DimensionMismatch,
    EmptyWindow,
    GroupMismatch,
    InclusionFailed,
    NotACovering,
    UnknownIndex,
    WeightMismatch,
)
from .groups import StratifiedGroup
from .lattice import Lattice, count_ball, enumerate_ball
from .quasinorm import QuasiNorm, chunked_rngs, estimate_quasi_constant

__all__ = [
    "Ball", "Shell", "CoreBall", "membership", "Verdict", "intersect",
    "Window", "AlphaPoly", "Dyadic", "Covering",
    "build_uniform", "build_alpha", "build_besov", "covering_threshold",
    "star_sets", "admissibility_estimate", "AdmissibilityResult",
    "unit_ball_volume", "ball_volume_mc", "shell_volume_mc", "shell_volume",
    "verify_size_condition", "verify_ratio_condition",
    "weak_subordination_counts", "moderate_weight_check", "safe_constant",
    "alpha_piece", "count_in_piece", "piece_volumes",
]

YES, NO, UNKNOWN = 1, 0, 2
_VERDICT_NAMES = {YES: "yes", NO: "no", UNKNOWN: "unknown"}
PATH_STEPS = 33
DEFAULT_BUDGET = 600
PAIR_CHUNK = 100_000


# pieces ----------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Ball:
    center: np.ndarray
    radius: float


@dataclass(frozen=True)
class Shell:
    """Dyadic shell ``2^(m-1) < ||x|| < 2^(m+1)``."""

    m: int

    @property
    def r_in(self) -> float:
        return 2.0 ** (self.m - 1)

    @property
    def r_out(self) -> float:
        return 2.0 ** (self.m + 1)


@dataclass(frozen=True)
class CoreBall:
    """The origin ball ``||x|| < radius`` of a dyadic covering."""

    radius: float = 2.0


def membership(piece, norm: QuasiNorm, x):
    """Exact (open) membership of (batched) points in a piece."""
    G = norm.group
    x = np.asarray(x, dtype=float)
    if isinstance(piece, Ball):
        return norm.value(G.multiply(G.inverse(piece.center), x)) < piece.radius
    v = norm.value(x)
    if isinstance(piece, CoreBall):
        return v < piece.radius
    if isinstance(piece, Shell):
        return (v > piece.r_in) & (v < piece.r_out)
    raise TypeError(f"not a covering piece: {piece!r}")


@lru_cache(maxsize=None)
def _constant_cached(group, kind):
    return estimate_quasi_constant(QuasiNorm(group, kind), samples=20000, seed=0).c_est


def safe_constant(norm: QuasiNorm) -> float:
    """Constant used in disjointness certificates.

    Norms that are known to be subadditive get exactly 1.  Otherwise the
    sampled constant is inflated by the safety factor 1.25.
    """
    if norm.is_subadditive:
        return 1.0
    return 1.25 * _constant_cached(norm.group, norm.kind)


# intersection verdicts ------------------------------------------------------

@dataclass(frozen=True, eq=False)
class Verdict:
    """Outcome of an intersection test.

    ``kind`` is ``"yes"`` (``witness`` lies in both pieces), ``"no"``
    (``margin > 0`` certifies disjointness) or ``"unknown"``.
    """

    kind: str
    witness: np.ndarray | None = None
    margin: float | None = None

    def __bool__(self):
        return self.kind == "yes"


def _path_params(r1, r2):
    t = np.linspace(0.0, 1.0, PATH_STEPS)
    tstar = r1 / (r1 + r2)
    return t, tstar


def _ball_pairs(norm, d, r1, r2, c_safe, budget=DEFAULT_BUDGET, refine=True):
    """Verdicts for balls ``B(0, r1)`` and ``B(d, r2)`` in the local frame.

    Returns ``codes, witnesses, margins`` where witnesses are local
    coordinates (to be left-translated by the first center).
    """
    G = norm.group
    d = np.atleast_2d(np.asarray(d, dtype=float))
    m = len(d)
    r1 = np.broadcast_to(np.asarray(r1, dtype=float), (m,))
    r2 = np.broadcast_to(np.asarray(r2, dtype=float), (m,))
    nd = norm.value(d)
    margin = nd - c_safe * (r1 + r2)
    codes = np.full(m, UNKNOWN, dtype=np.int8)
    codes[margin >= 0] = NO
    wit = np.full((m, G.dim), np.nan)
    todo = np.flatnonzero(codes == UNKNOWN)
    if len(todo):
        t = np.linspace(0.0, 1.0, PATH_STEPS)
        ts = np.concatenate([np.broadcast_to(t, (len(todo), PATH_STEPS)),
                             (r1[todo] / (r1[todo] + r2[todo]))[:, None]], axis=1)
        dd = d[todo][:, None, :]
        # D_t(d) for t in [0, 1]; t = 0 gives the identity
        w = dd * ts[..., None] ** G.degrees
        f = np.maximum(norm.value(w) / r1[todo, None],
                       norm.value(G.multiply(G.inverse(dd), w)) / r2[todo, None])
        best = np.argmin(f, axis=1)
        ok = f[np.arange(len(todo)), best] < 1.0
        hit = todo[ok]
        codes[hit] = YES
        wit[hit] = w[np.arange(len(todo)), best][ok]
        if refine and (~ok).any():
            rest = todo[~ok]
            bc, bw, bm = _branch_and_bound(norm, d[rest], r1[rest], r2[rest])
            codes[rest] = bc
            wit[rest[bc == YES]] = bw[bc == YES]
            margin[rest[bc == NO]] = bm[bc == NO]
            for i, b in zip(rest[bc == UNKNOWN], best[~ok][bc == UNKNOWN]):
                w0 = d[i] * ts[np.flatnonzero(todo == i)[0], b] ** G.degrees
                res = _hill_climb(norm, d[i], r1[i], r2[i], w0, budget)
                if res is not None:
                    codes[i] = YES
                    wit[i] = res
    return codes, wit, margin


def _hill_climb(norm, d, r1, r2, w0, budget):
    G = norm.group
    dinv = G.inverse(d)

    def f(w):
        return max(norm.value(w) / r1, norm.value(G.multiply(dinv, w)) / r2)

    res = minimize(f, w0, method="Nelder-Mead",
                   options=dict(maxfev=int(budget), xatol=1e-10, fatol=1e-12,
                                initial_simplex=w0 + np.vstack([np.zeros(G.dim),
                                                                0.25 * min(r1, r2) * np.eye(G.dim)])))
    if f(res.x) < 1.0:
        return res.x
    return None


# interval branch and bound ---------------------------------------------------

def _imul(alo, ahi, blo, bhi):
    p = np.stack([alo * blo, alo * bhi, ahi * blo, ahi * bhi])
    return p.min(axis=0), p.max(axis=0)


def _ibracket(G, alo, ahi, blo, bhi):
    """Interval enclosure of ``[a, b]`` for boxes ``a``, ``b`` of shape (m, n)."""
    i, j, M = G._bi, G._bj, G._bM
    p_lo, p_hi = _imul(alo[:, i], ahi[:, i], blo[:, j], bhi[:, j])
    q_lo, q_hi = _imul(alo[:, j], ahi[:, j], blo[:, i], bhi[:, i])
    d_lo, d_hi = p_lo - q_hi, p_hi - q_lo
    Mp, Mn = np.maximum(M, 0.0), np.minimum(M, 0.0)
    return d_lo @ Mp + d_hi @ Mn, d_hi @ Mp + d_lo @ Mn


def _imul_left_batch(G, x, lo, hi):
    """Interval enclosure of ``x * w`` for points ``x`` and boxes ``w`` (row-wise)."""
    if G.step == 1:
        return x + lo, x + hi
    xs = np.broadcast_to(x, lo.shape)
    blo, bhi = _ibracket(G, xs, xs, lo, hi)
    zlo = x + lo + 0.5 * blo
    zhi = x + hi + 0.5 * bhi
    if G.step >= 3:
        a_lo, a_hi = _ibracket(G, xs, xs, blo, bhi)
        c_lo, c_hi = _ibracket(G, lo, hi, blo, bhi)
        zlo = zlo + (a_lo - c_hi) / 12.0
        zhi = zhi + (a_hi - c_lo) / 12.0
    return zlo, zhi


def _box_bounds(norm, r):
    """Row-wise :meth:`QuasiNorm.box_bound` for an array of radii."""
    b = np.asarray(r, dtype=float)[:, None] ** norm.group.degrees
    if norm.kind == "cygan_koranyi":
        b[:, :-1] = np.asarray(r, dtype=float)[:, None]
        b[:, -1] = np.asarray(r, dtype=float) ** 2 / 4.0
    return b


def _norm_lower(norm, lo, hi):
    a = np.where(lo > 0, lo, np.where(hi < 0, -hi, 0.0))
    return norm.value(a)


def _branch_and_bound(norm, d, r1, r2, max_boxes=8192, max_levels=60, chunk=4096,
                      total_boxes=2_000_000):
    """Certify balls ``B(0, r1)`` and ``B(d, r2)`` as disjoint or intersecting.

    Batched over pairs.  The bounding box of ``B(0, r1)`` is bisected; boxes
    whose interval enclosure misses either ball are discarded.  A pair is
    ``YES`` once some box center lies in both balls, ``NO`` once all its
    boxes are discarded (the margin is the smallest separation gap of a
    discarded box) and ``UNKNOWN`` when it exceeds ``max_boxes``.

    Returns
    -------
    codes, witnesses, margins : ndarray
    """
    G = norm.group
    d = np.atleast_2d(np.asarray(d, dtype=float))
    m = len(d)
    r1 = np.broadcast_to(np.asarray(r1, dtype=float), (m,))
    r2 = np.broadcast_to(np.asarray(r2, dtype=float), (m,))
    codes = np.full(m, UNKNOWN, dtype=np.int8)
    wit = np.full((m, G.dim), np.nan)
    margin = np.full(m, np.inf)
    if G.law != "bch":
        return codes, wit, margin
    for s0 in range(0, m, chunk):
        sl = np.arange(s0, min(s0 + chunk, m))
        B = _box_bounds(norm, r1[sl])
        lo, hi, own = -B, B.copy(), sl.copy()
        pending = np.ones(m, dtype=bool)
        for _ in range(max_levels):
            if not len(own):
                break
            x = -d[own]
            mid = 0.5 * (lo + hi)
            both = (norm.value(mid) < r1[own]) & (norm.value(G.multiply(x, mid)) < r2[own])
            if both.any():
                first = np.unique(own[both], return_index=True)
                codes[first[0]] = YES
                wit[first[0]] = mid[np.flatnonzero(both)[first[1]]]
                pending[first[0]] = False
            lb1 = _norm_lower(norm, lo, hi)
            zlo, zhi = _imul_left_batch(G, x, lo, hi)
            lb2 = _norm_lower(norm, zlo, zhi)
            gap = np.maximum(lb1 - r1[own], lb2 - r2[own])
            out = gap > 0
            np.minimum.at(margin, own[out], gap[out])
            keep = ~out & pending[own]
            cnt = np.bincount(own[keep], minlength=m)
            # pairs whose boxes are all discarded are disjoint
            gone = sl[pending[sl] & (cnt[sl] == 0)]
            codes[gone] = NO
            pending[gone] = False
            # pairs over budget stay unknown
            over = sl[pending[sl] & (2 * cnt[sl] > max_boxes)]
            pending[over] = False
            if 2 * cnt[pending].sum() > total_boxes:
                live = sl[pending[sl]]
                order = live[np.argsort(cnt[live], kind="stable")]
                fits = np.cumsum(2 * cnt[order]) <= total_boxes
                pending[order[~fits]] = False
            keep &= pending[own]
            lo, hi, own = lo[keep], hi[keep], own[keep]
            if not len(own):
                break
            scale = _box_bounds(norm, r1[own])
            j = np.argmax((hi - lo) / scale, axis=1)
            rows = np.arange(len(own))
            cut = 0.5 * (lo[rows, j] + hi[rows, j])
            lo2, hi2 = lo.copy(), hi.copy()
            hi[rows, j] = cut
            lo2[rows, j] = cut
            lo = np.concatenate([lo, lo2])
            hi = np.concatenate([hi, hi2])
            own = np.concatenate([own, own])
    return codes, wit, margin


def _ball_shell(norm, ball, r_in, r_out, c_safe, budget):
    G = norm.group
    c = np.asarray(ball.center, dtype=float)
    r = ball.radius
    nc = float(norm.value(c))
    if c_safe * (nc + r) <= r_in:
        return Verdict("no", margin=float(r_in - c_safe * (nc + r)))
    if nc / c_safe - r >= r_out:
        return Verdict("no", margin=float(nc / c_safe - r - r_out))

    def f(z):
        v = norm.value(z)
        lo = r_in / v if v > 0 else np.inf
        return max(norm.value(G.multiply(G.inverse(c), z)) / r, lo, v / r_out)

    if nc == 0:
        starts = [G.dilate(0.5 * (r_in + min(r, r_out)), np.eye(G.dim)[0])]
    else:
        targets = np.linspace(max(r_in, 1e-12), r_out, PATH_STEPS)
        starts = [G.dilate(s / nc, c) for s in targets]
    vals = [f(z) for z in starts]
    z0 = starts[int(np.argmin(vals))]
    if min(vals) < 1.0:
        return Verdict("yes", witness=z0)
    res = minimize(f, z0, method="Nelder-Mead", options=dict(maxfev=int(budget)))
    if f(res.x) < 1.0:
        return Verdict("yes", witness=res.x)
    return Verdict("unknown")


def intersect(a, b, norm: QuasiNorm, c_safe: float | None = None,
              budget: int = DEFAULT_BUDGET) -> Verdict:
    """Decide whether two pieces intersect.

    Parameters
    ----------
    a, b : Ball, Shell or CoreBall
    norm : QuasiNorm
    c_safe : float, optional
        Constant in the disjointness certificate; defaults to
        :func:`safe_constant`.
    budget : int
        Maximum function evaluations of the local search.  Exhausting it
        yields ``unknown``.

    Returns
    -------
    Verdict
    """
    if c_safe is None:
        c_safe = safe_constant(norm)
    G = norm.group
    if isinstance(a, CoreBall):
        a = Ball(np.zeros(G.dim), a.radius)
    if isinstance(b, CoreBall):
        b = Ball(np.zeros(G.dim), b.radius)
    if isinstance(a, Shell) and isinstance(b, Shell):
        if abs(a.m - b.m) <= 1:
            m = max(a.m, b.m)
            w = np.zeros(G.dim)
            w[0] = 1.5 * 2.0 ** (m - 1) if a.m != b.m else 2.0 ** a.m
            return Verdict("yes", witness=w)
        lo, hi = sorted((a, b), key=lambda s: s.m)
        return Verdict("no", margin=float(hi.r_in - lo.r_out))
    if isinstance(a, Shell) or isinstance(b, Shell):
        ball, shell = (b, a) if isinstance(a, Shell) else (a, b)
        return _ball_shell(norm, ball, shell.r_in, shell.r_out, c_safe, budget)
    c1 = np.asarray(a.center, dtype=float)
    c2 = np.asarray(b.center, dtype=float)
    d = G.multiply(G.inverse(c1), c2)
    codes, wit, margin = _ball_pairs(norm, d, a.radius, b.radius, c_safe, budget)
    if codes[0] == NO:
        return Verdict("no", margin=float(margin[0]))
    if codes[0] == YES:
        z = G.multiply(c1, wit[0])
        if membership(a, norm, z) and membership(b, norm, z):
            return Verdict("yes", witness=z)
    return Verdict("unknown")


# windows and weights ---------------------------------------------------------

@dataclass(frozen=True)
class Window:
    """Finite truncation region: quasi-ball ``||x|| < W`` or homogeneous box
    ``|x_j| < W^(v_j)``."""

    W: float
    kind: str = "quasiball"

    def __post_init__(self):
        if not self.W > 0:
            raise EmptyWindow("window size must be positive")
        if self.kind not in ("quasiball", "box"):
            raise DimensionMismatch(f"unknown window kind {self.kind!r}")

    def contains(self, norm, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "quasiball":
            return norm.value(x) < self.W
        return np.all(np.abs(x) < np.power(self.W, norm.group.degrees), axis=-1)

    def radius(self, norm) -> float:
        """Radius of a quasi-ball containing the window."""
        if self.kind == "quasiball":
            return float(self.W)
        return float(self.W * np.sqrt(norm.group.dim))

    def sample(self, norm, rng, k):
        if self.kind == "quasiball":
            return norm.sample_ball(rng, k, self.W)
        b = np.power(self.W, norm.group.degrees)
        return rng.uniform(-1.0, 1.0, size=(k, norm.group.dim)) * b


def _as_window(window):
    if window is None or isinstance(window, Window):
        return window
    return Window(float(window))


@dataclass(frozen=True)
class AlphaPoly:
    """Weight ``k -> (1 + ||k||^(2/(1-alpha)))^(s/2)``."""

    s: float
    alpha: float = 0.0

    def __call__(self, knorm):
        return (1.0 + np.asarray(knorm, dtype=float) ** (2.0 / (1.0 - self.alpha))) ** (self.s / 2.0)


@dataclass(frozen=True)
class Dyadic:
    """Weight ``m -> 2^(m s)``."""

    s: float

    def __call__(self, m):
        return 2.0 ** (np.asarray(m, dtype=float) * self.s)


# coverings ---------------------------------------------------------------------

@dataclass(eq=False)
class Covering:
    """A finite window of a covering family.

    Attributes
    ----------
    norm : QuasiNorm
    family : {"uniform", "alpha", "besov"}
    params : dict
        ``{"R"}``, ``{"alpha", "r"}`` or ``{"m_max"}``.
    indices : ndarray
        Integer lattice coordinates ``(K, n)`` or shell numbers ``(K,)``.
    centers, radii : ndarray
        Ball centers and radii (shells: origin and outer radius).
    window : Window
        Region on which statistics are taken; every piece whose center lies
        in it has its complete neighbour list among the built pieces.
    extent : float
        All pieces with ``||center|| < extent`` are built.
    """

    norm: QuasiNorm
    family: str
    params: dict
    indices: np.ndarray
    centers: np.ndarray
    radii: np.ndarray
    window: Window
    extent: float
    c_safe: float
    lattice: Lattice | None = None
    _adj: object = field(default=None, repr=False)
    _unknown_pairs: int = field(default=0, repr=False)

    @property
    def group(self) -> StratifiedGroup:
        return self.norm.group

    def __len__(self):
        return len(self.radii)

    def piece(self, i):
        if self.family == "besov":
            m = int(self.indices[i])
            return CoreBall(2.0) if m == 0 else Shell(m)
        return Ball(self.centers[i], float(self.radii[i]))

    def index_norms(self):
        """``||k||`` of lattice indices (shell number for dyadic coverings)."""
        if self.family == "besov":
            return self.indices.astype(float)
        return self.norm.value(self.indices * self.lattice.gamma)

    def position(self, index) -> int:
        """Row of an index (lattice integer coordinates or shell number)."""
        if self.family == "besov":
            hit = np.flatnonzero(self.indices == int(index))
        else:
            k = np.asarray(index, dtype=np.int64)
            hit = np.flatnonzero(np.all(self.indices == k, axis=1))
        if not len(hit):
            raise UnknownIndex(f"index {index!r} is not in the covering")
        return int(hit[0])

    def interior(self, window=None):
        """Boolean mask of pieces whose center lies in ``window``."""
        window = _as_window(window) or self.window
        if window.radius(self.norm) > self.window.radius(self.norm) + 1e-12:
            raise EmptyWindow("requested window exceeds the construction window")
        if self.family == "besov":
            return self.indices < self.params["m_max"]
        return window.contains(self.norm, self.centers)

    # adjacency -------------------------------------------------------------
    def adjacency(self):
        """Sparse symmetric matrix with entries 1 (yes) and 2 (unknown)."""
        if self._adj is None:
            self._adj = _build_adjacency(self)
            self._unknown_pairs = int((self._adj.data == UNKNOWN).sum() // 2)
        return self._adj

    def adjacency_within(self, mask):
        """Verdicts for pairs with both pieces in ``mask`` only.

        Cheaper than :meth:`adjacency` when ``mask`` is a small part of the
        covering; the full matrix is used when it is already cached.
        """
        mask = np.asarray(mask, dtype=bool)
        if self._adj is not None or self.family != "alpha":
            A = sp.coo_matrix(self.adjacency())
            keep = mask[A.row] & mask[A.col]
            return sp.csr_matrix((A.data[keep], (A.row[keep], A.col[keep])), shape=A.shape)
        return _build_adjacency(self, subset=mask)

    def neighbours(self, i, unknown_as_edge=True):
        A = self.adjacency()
        row = A.indices[A.indptr[i]:A.indptr[i + 1]]
        val = A.data[A.indptr[i]:A.indptr[i + 1]]
        keep = (val == YES) | (unknown_as_edge & (val == UNKNOWN))
        return row[keep]

    def locate(self, x):
        """Rows of all pieces containing the point ``x``."""
        x = np.asarray(x, dtype=float)
        if self.family == "besov":
            v = float(self.norm.value(x))
            m = self.indices
            lo = np.where(m == 0, -1.0, 2.0 ** (m - 1.0))
            return np.flatnonzero((v > lo) & (v < 2.0 ** (m + 1.0)))
        G = self.group
        r1 = G.rank
        rmax = float(self.radii.max())
        cand = np.flatnonzero(np.all(np.abs(self.centers[:, :r1] - x[:r1]) < rmax, axis=1))
        inside = self.norm.value(G.multiply(G.inverse(self.centers[cand]), x)) < self.radii[cand]
        return cand[inside]

    # export ----------------------------------------------------------------
    def to_dict(self):
        out = {
            "family": self.family,
            "params": {k: float(v) for k, v in self.params.items()},
            "group": self.group.to_dict(),
            "norm": self.norm.kind,
            "window": {"kind": self.window.kind, "W": self.window.W},
            "extent": self.extent,
            "c_safe": self.c_safe,
            "lattice": None if self.lattice is None else list(self.lattice.scales),
        }
        if self.family == "besov":
            out["pieces"] = [{"index": int(m), "kind": "core" if m == 0 else "shell"}
                             for m in self.indices]
        else:
            out["pieces"] = [{"index": k.tolist(), "center": c.tolist(), "radius": float(r)}
                             for k, c, r in zip(self.indices, self.centers, self.radii)]
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def verdict_csv(self):
        """Rows ``i, j, verdict, margin_or_witness`` for the built adjacency."""
        A = sp.triu(self.adjacency(), k=1).tocoo()
        order = np.lexsort((A.col, A.row))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "j", "verdict"])
        for r, c, v in zip(A.row[order], A.col[order], A.data[order]):
            w.writerow([int(r), int(c), _VERDICT_NAMES[int(v)]])
        return buf.getvalue()


def _extent(norm, window, c_safe, radius_of):
    # smallest E such that every neighbour of a piece centred in the window
    # has its center inside B(0, E)
    W = window.radius(norm)
    E = W
    for _ in range(200):
        E_new = c_safe * (W + c_safe * (radius_of(W) + radius_of(E)))
        if abs(E_new - E) < 1e-9 * E_new:
            break
        E = E_new
    return float(E_new)


def _coverage_samples(norm, window, samples, seed):
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 7]))
    pts = window.sample(norm, rng, int(samples))
    return np.vstack([np.zeros(norm.group.dim), pts])


def _min_scaled_distance(centers, scale, norm, pts, tree=None):
    """For each point, ``min_k ||c_k^{-1} x|| / s_k``.

    Candidates are restricted through a first-layer KD-tree: the first-layer
    part of ``c^{-1} x`` is ``x_1 - c_1`` and bounds the norm from below, so
    pieces with first-layer distance at least ``rho s_max`` cannot beat
    ``rho``.  The search radius doubles until every point is certified.
    """
    G = norm.group
    r1 = G.rank
    pts = np.atleast_2d(pts)
    if tree is None:
        tree = cKDTree(centers[:, :r1])
    smax = float(scale.max())
    out = np.full(len(pts), np.inf)
    todo = np.arange(len(pts))
    rho = 1.0
    while len(todo):
        lists = tree.query_ball_point(pts[todo, :r1], rho * smax, p=np.inf)
        lens = np.fromiter((len(l) for l in lists), dtype=np.int64, count=len(lists))
        owner = np.repeat(np.arange(len(todo)), lens)
        cand = np.fromiter((j for l in lists for j in l), dtype=np.int64, count=int(lens.sum()))
        best = np.full(len(todo), np.inf)
        if len(cand):
            v = norm.value(G.multiply(G.inverse(centers[cand]), pts[todo[owner]])) / scale[cand]
            np.minimum.at(best, owner, v)
        done = best <= rho
        out[todo[done]] = best[done]
        todo = todo[~done]
        rho *= 2.0
    return out


def _lattice_pieces(N, norm, alpha, E):
    G = N.group
    beta = alpha / (1.0 - alpha)
    # ||c_k|| = ||k||^(1+beta) < E
    pts = enumerate_ball(N, norm, E ** (1.0 / (1.0 + beta)), budget=20_000_000)
    if alpha > 0:
        pts = pts[np.any(pts != 0, axis=1)]
    kn = norm.value(pts)
    scale = np.where(kn > 0, kn, 1.0) ** beta
    centers = G.dilate(scale, pts) if alpha > 0 else pts
    return N.integer_coords(pts), centers, scale


def covering_threshold(G, N, norm, alpha=0.0, window=4.0, samples=2000, seed=0,
                       refine=4):
    """Smallest radius parameter covering all window samples.

    For each sample ``x`` the quantity ``min_k ||c_k^{-1} x|| / ||k||^beta``
    is the least radius parameter covering ``x``; the threshold is its
    maximum over samples, refined by local search around the worst ones.
    This is the value a bisection on window coverage converges to.
    """
    window = _as_window(window)
    W = window.radius(norm)
    E = 2.0 * W + 4.0 * float(np.max(N.gamma))
    _, centers, scale = _lattice_pieces(N, norm, alpha, E)
    tree = cKDTree(centers[:, :G.rank])
    pts = _coverage_samples(norm, window, samples, seed)
    vals = _min_scaled_distance(centers, scale, norm, pts, tree)
    best = float(vals.max())

    def neg(x):
        if not window.contains(norm, x):
            return 0.0
        return -float(_min_scaled_distance(centers, scale, norm, x[None], tree)[0])

    for i in np.argsort(-vals, kind="stable")[:refine]:
        res = minimize(neg, pts[i], method="Nelder-Mead", options=dict(maxfev=300))
        best = max(best, -float(res.fun))
    return best


def _verify_cover(cov, samples, seed):
    pts = _coverage_samples(cov.norm, cov.window, samples, seed)
    v = _min_scaled_distance(cov.centers, cov.radii, cov.norm, pts)
    bad = np.flatnonzero(v >= 1.0)
    if len(bad):
        w = pts[bad[0]]
        raise NotACovering(f"point {w.tolist()} lies in no piece", witness=w)


def build_alpha(G, N: Lattice, norm: QuasiNorm, alpha: float, r: float, window=4.0,
                samples=2000, seed=0, verify=True) -> Covering:
    """Intermediate covering with pieces ``B(c_k, r ||k||^beta)``.

    Centers are ``c_k = D_{||k||^beta}(k)`` with ``beta = alpha/(1-alpha)``,
    so ``||c_k|| = ||k||^(1+beta)`` and the radius equals ``r ||c_k||^alpha``.
    On abelian groups this is the scalar multiple ``||k||^beta k``.  For
    ``alpha = 0`` all lattice points (including the origin) index pieces of
    radius ``r``; for ``alpha > 0`` the origin is excluded.

    Raises
    ------
    AlphaOutOfRange
        Unless ``0 <= alpha < 1``.
    NotACovering
        Some window sample lies in no piece.
    """
    if not 0.0 <= alpha < 1.0:
        raise AlphaOutOfRange(f"alpha must lie in [0, 1), got {alpha}")
    if r <= 0:
        raise DimensionMismatch("radius parameter must be positive")
    if N.group != G or norm.group != G:
        raise GroupMismatch("lattice, norm and group disagree")
    window = _as_window(window)
    c_safe = safe_constant(norm)
    E = _extent(norm, window, c_safe, lambda e: r * e ** alpha)
    idx, centers, scale = _lattice_pieces(N, norm, alpha, E)
    family = "uniform" if alpha == 0 else "alpha"
    params = {"R": float(r)} if alpha == 0 else {"alpha": float(alpha), "r": float(r)}
    cov = Covering(norm, family, params, idx, centers, r * scale, window, E, c_safe, N)
    if verify:
        _verify_cover(cov, samples, seed)
    return cov


def build_uniform(G, N: Lattice, norm: QuasiNorm, R: float, window=4.0, samples=2000,
                  seed=0, verify=True) -> Covering:
    """Uniform covering ``{B(n, R)}`` indexed by lattice points."""
    return build_alpha(G, N, norm, 0.0, R, window, samples, seed, verify)


def build_besov(G, norm: QuasiNorm, m_max: int) -> Covering:
    """Dyadic covering: core ball ``||x|| < 2`` and shells ``m = 1..m_max``."""
    if m_max < 2:
        raise DimensionMismatch("m_max must be at least 2")
    if norm.group != G:
        raise GroupMismatch("norm and group disagree")
    m = np.arange(m_max + 1)
    centers = np.zeros((m_max + 1, G.dim))
    radii = 2.0 ** (m + 1.0)
    window = Window(2.0 ** m_max)
    return Covering(norm, "besov", {"m_max": int(m_max)}, m, centers, radii, window,
                    float(2.0 ** (m_max + 1)), safe_constant(norm))


# adjacency construction ------------------------------------------------------

def _piece_boxes(cov):
    """Axis-aligned boxes enclosing each ball piece (interval arithmetic)."""
    G = cov.group
    b = _box_bounds(cov.norm, cov.radii)
    if G.law != "bch":
        # raw laws: only the first layer is controlled
        lo = np.full(b.shape, -np.inf)
        hi = np.full(b.shape, np.inf)
        r1 = G.rank
        lo[:, :r1] = cov.centers[:, :r1] - b[:, :r1]
        hi[:, :r1] = cov.centers[:, :r1] + b[:, :r1]
        lo[:, r1:], hi[:, r1:] = -1e300, 1e300
        return lo, hi
    return _imul_left_batch(G, cov.centers, -b, b)


def _keys(idx, lo, dims):
    return np.ravel_multi_index(tuple((idx - lo).T), dims, mode="wrap")


def _build_adjacency(cov: Covering, subset=None):
    K = len(cov)
    if cov.family == "besov":
        i = np.arange(K - 1)
        rows = np.concatenate([i, i + 1])
        cols = np.concatenate([i + 1, i])
        return sp.csr_matrix((np.full(len(rows), YES, np.int8), (rows, cols)), shape=(K, K))
    G = cov.group
    norm = cov.norm
    if cov.family == "uniform":
        N = cov.lattice
        R = cov.params["R"]
        offs = enumerate_ball(N, norm, cov.c_safe * 2.0 * R, budget=20_000_000)
        offs = offs[np.any(offs != 0, axis=1)]
        codes, _, _ = _ball_pairs(norm, offs, R, R, cov.c_safe)
        keep = codes != NO
        offs, codes = offs[keep], codes[keep]
        lo = cov.indices.min(axis=0)
        dims = tuple(int(v) for v in cov.indices.max(axis=0) - lo + 1)
        keys = _keys(cov.indices, lo, dims)
        order = np.argsort(keys)
        skeys = keys[order]
        rows, cols, vals = [], [], []
        for o, c in zip(offs, codes):
            tgt = N.integer_coords(G.multiply(cov.centers, o))
            inb = np.all((tgt >= lo) & (tgt < lo + np.array(dims)), axis=1)
            src = np.flatnonzero(inb)
            kk = _keys(tgt[inb], lo, dims)
            pos = np.searchsorted(skeys, kk)
            pos = np.minimum(pos, len(skeys) - 1)
            found = skeys[pos] == kk
            rows.append(src[found])
            cols.append(order[pos[found]])
            vals.append(np.full(int(found.sum()), c, np.int8))
        rows, cols, vals = (np.concatenate(a) for a in (rows, cols, vals))
        A = sp.csr_matrix((vals, (rows, cols)), shape=(K, K))
        return A.maximum(A.T).tocsr()
    # generic balls: bounding-box prefilter, then batched verdicts
    lo, hi = _piece_boxes(cov)
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    hmax = half.max(axis=0)
    sub = np.arange(K) if subset is None else np.flatnonzero(subset)
    tree = cKDTree(mid[sub] / hmax)
    pairs = sub[tree.query_pairs(2.0 * (1 + 1e-9), p=np.inf, output_type="ndarray")]
    out_i, out_j, out_c = [np.zeros(0, int)], [np.zeros(0, int)], [np.zeros(0, np.int8)]
    for s0 in range(0, len(pairs), PAIR_CHUNK):
        i, j = pairs[s0:s0 + PAIR_CHUNK, 0], pairs[s0:s0 + PAIR_CHUNK, 1]
        keep = np.all((lo[i] < hi[j]) & (lo[j] < hi[i]), axis=1)
        i, j = i[keep], j[keep]
        d = G.multiply(G.inverse(cov.centers[i]), cov.centers[j])
        codes, _, _ = _ball_pairs(norm, d, cov.radii[i], cov.radii[j], cov.c_safe)
        keep = codes != NO
        out_i.append(i[keep])
        out_j.append(j[keep])
        out_c.append(codes[keep])
    i, j, codes = (np.concatenate(a) for a in (out_i, out_j, out_c))
    rows = np.concatenate([i, j])
    cols = np.concatenate([j, i])
    return sp.csr_matrix((np.concatenate([codes, codes]), (rows, cols)), shape=(K, K))


# neighbourhood statistics --------------------------------------------------

def star_sets(cov: Covering, index, k: int = 1, unknown_as_edge: bool = True):
    """Rows of the ``k``-fold star of a piece (the piece itself included)."""
    if k < 1:
        raise DimensionMismatch("k must be at least 1")
    row = cov.position(index)
    cur = {row}
    for _ in range(k):
        nxt = set(cur)
        for r in cur:
            nxt.update(int(v) for v in cov.neighbours(r, unknown_as_edge))
        cur = nxt
    return sorted(cur)


@dataclass(frozen=True)
class AdmissibilityResult:
    """Windowed estimate of the admissibility constant."""

    n_q: int
    boundary_margin_used: float
    interior_pieces: int
    unknown_pairs: int
    unknown_as_edge: bool
    label: str = "windowed estimate"


def admissibility_estimate(cov: Covering, window=None, unknown_as_edge=True) -> AdmissibilityResult:
    """Largest star size over pieces centred in the window."""
    mask = cov.interior(window)
    if not mask.any():
        raise EmptyWindow("no piece is centred inside the window")
    A = cov.adjacency()
    if unknown_as_edge:
        deg = np.diff(A.indptr)
    else:
        B = A.copy()
        B.data = (B.data == YES).astype(np.int8)
        B.eliminate_zeros()
        deg = np.diff(B.indptr)
    n_q = int(deg[mask].max()) + 1
    W = (_as_window(window) or cov.window).radius(cov.norm)
    return AdmissibilityResult(n_q, float(cov.extent - W), int(mask.sum()),
                               cov._unknown_pairs, bool(unknown_as_edge))


# volumes --------------------------------------------------------------------

def ball_volume_mc(norm: QuasiNorm, R=1.0, samples=10**6, seed=0):
    """Monte Carlo volume of ``B(0, R)`` over its exact bounding box.

    Returns
    -------
    vol, se : float
        Estimate and standard error.
    """
    b = norm.box_bound(R)
    box = float(np.prod(2.0 * b))
    hits = 0
    for start, stop, rng in chunked_rngs(seed, int(samples), chunk=65536):
        u = rng.uniform(-1.0, 1.0, size=(stop - start, norm.group.dim)) * b
        hits += int((norm.value(u) < R).sum())
    p = hits / samples
    return box * p, box * np.sqrt(p * (1 - p) / samples)


@lru_cache(maxsize=None)
def _mu_cached(group, kind, samples, seed):
    return ball_volume_mc(QuasiNorm(group, kind), 1.0, samples, seed)


def unit_ball_volume(norm: QuasiNorm, samples=10**6, seed=0):
    """Cached ``(mu, se)`` for the unit ball."""
    return _mu_cached(norm.group, norm.kind, int(samples), int(seed))


def shell_volume(mu, Q, m):
    """Exact volume of shell ``m`` given the unit-ball volume."""
    return mu * (4.0 ** Q - 1.0) * 2.0 ** (Q * m) / 2.0 ** Q


def shell_volume_mc(norm: QuasiNorm, m, samples=10**6, seed=0):
    """Monte Carlo volume of shell ``m`` over the box of ``B(0, 2^(m+1))``."""
    R = 2.0 ** (m + 1)
    b = norm.box_bound(R)
    box = float(np.prod(2.0 * b))
    hits = 0
    for start, stop, rng in chunked_rngs(seed, int(samples), chunk=65536):
        u = rng.uniform(-1.0, 1.0, size=(stop - start, norm.group.dim)) * b
        v = norm.value(u)
        hits += int(((v < R) & (v > R / 4.0)).sum())
    p = hits / samples
    return box * p, box * np.sqrt(p * (1 - p) / samples)


def piece_volumes(cov: Covering, mu):
    Q = cov.group.homogeneous_dim
    if cov.family == "besov":
        m = cov.indices
        return np.where(m == 0, mu * 2.0 ** Q, shell_volume(mu, Q, m))
    return mu * cov.radii ** Q


def verify_size_condition(cov: Covering, samples=8, seed=0, window=None, mu_samples=10**6,
                          points="samples"):
    """Ratio statistics for the size condition.

    For ``alpha > 0`` reports min and max of
    ``|P_i|^(2/(alpha Q)) / (1 + ||xi||^2)`` over pieces centred in the
    window.  With ``points="samples"`` the points ``xi`` are uniform samples
    of each piece plus its center; with ``points="centers"`` only the center
    (``(2^m, 0, ..., 0)`` for shells) is used.  The
    ``spread`` entry is ``sqrt(max/min)``, the smallest ``c`` with all ratios
    in ``[g/c, g c]`` for a common normalisation ``g``.  For ``alpha = 0``
    the max/min volume ratio is reported.
    """
    mu, _ = unit_ball_volume(cov.norm, mu_samples, 0)
    vol = piece_volumes(cov, mu)
    mask = cov.interior(window)
    if cov.family == "uniform":
        v = vol[mask]
        return {"alpha": 0.0, "volume_ratio": float(v.max() / v.min()), "pieces": int(mask.sum())}
    alpha = 1.0 if cov.family == "besov" else cov.params["alpha"]
    Q = cov.group.homogeneous_dim
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 11]))
    G = cov.group
    lo, hi = np.inf, 0.0
    if points not in ("samples", "centers"):
        raise DimensionMismatch("points must be 'samples' or 'centers'")
    for i in np.flatnonzero(mask):
        if points == "centers":
            pts = cov.centers[i][None].copy()
            if cov.family == "besov":
                pts[0, 0] = 2.0 ** int(cov.indices[i]) if cov.indices[i] > 0 else 0.0
        elif cov.family == "besov":
            m = int(cov.indices[i])
            r_out = 2.0 ** (m + 1)
            pts = cov.norm.sample_ball(rng, 4 * samples, r_out)
            v = cov.norm.value(pts)
            pts = pts[(v > (0 if m == 0 else r_out / 4))][:samples]
        else:
            y = cov.norm.sample_ball(rng, samples, cov.radii[i])
            pts = np.vstack([cov.centers[i], G.multiply(cov.centers[i], y)])
        ratio = vol[i] ** (2.0 / (alpha * Q)) / (1.0 + cov.norm.value(pts) ** 2)
        lo, hi = min(lo, ratio.min()), max(hi, ratio.max())
    return {"alpha": alpha, "min": float(lo), "max": float(hi),
            "spread": float(np.sqrt(hi / lo)), "pieces": int(mask.sum())}


def verify_ratio_condition(cov: Covering, samples=200, ms=None, seed=0):
    """Out-ball to in-ball ratio ``K``.

    Balls give ``K = 1``.  For shells the inscribed ball
    ``B((2^m, 0, ..., 0), 2^(m-1))`` is checked to lie in shell ``m`` by
    membership sampling (half uniform, half near its boundary sphere), which
    yields ``K <= 2^(m+1) / 2^(m-1) = 4``.

    Raises
    ------
    InclusionFailed
        A sample of the inscribed ball falls outside the shell.
    """
    if cov.family != "besov":
        return 1.0
    norm = cov.norm
    G = cov.group
    ms = range(1, cov.params["m_max"] + 1) if ms is None else ms
    rng = np.random.default_rng(np.random.SeedSequence([int(seed), 13]))
    from .quasinorm import sample_unit_sphere
    for m in ms:
        c = np.zeros(G.dim)
        c[0] = 2.0 ** m
        rho = 2.0 ** (m - 1)
        half = samples // 2
        inner = norm.sample_ball(rng, half, rho)
        edge = G.dilate(rho * (1 - 1e-9), sample_unit_sphere(norm, rng, samples - half))
        pts = G.multiply(c, np.vstack([inner, edge]))
        ok = membership(Shell(m), norm, pts)
        if not ok.all():
            raise InclusionFailed(f"point {pts[np.argmin(ok)].tolist()} of the inscribed ball "
                                  f"leaves shell {m}", witness=pts[np.argmin(ok)])
    return 4.0


# subordination and weights ---------------------------------------------------

@dataclass(frozen=True)
class SubordinationCounts:
    rows: np.ndarray
    counts: np.ndarray
    unknown: np.ndarray
    method: str


def _check_pair(cov_a, cov_b):
    if cov_a.group != cov_b.group:
        raise GroupMismatch("coverings live on different groups")


def alpha_piece(N: Lattice, norm: QuasiNorm, alpha: float, r: float, k) -> Ball:
    """The single piece ``B(D_{||k||^beta}(k), r ||k||^beta)`` of an alpha covering.

    ``k`` is given in integer lattice coordinates.  Useful when the covering
    is far too large to build but individual pieces are needed.
    """
    if not 0.0 <= alpha < 1.0:
        raise AlphaOutOfRange(f"alpha must lie in [0, 1), got {alpha}")
    x = N.point(k)
    kn = float(norm.value(x))
    if alpha > 0 and kn == 0:
        raise UnknownIndex("the origin indexes no piece when alpha > 0")
    beta = alpha / (1.0 - alpha)
    s = kn ** beta if alpha > 0 else 1.0
    return Ball(norm.group.dilate(s, x), r * s)


def count_in_piece(piece, N: Lattice, norm: QuasiNorm, budget=50_000_000) -> int:
    """Number of lattice points of ``N`` inside a piece (exact count)."""
    if isinstance(piece, Ball):
        return count_ball(N, norm, piece.radius, center=piece.center, budget=budget)
    if isinstance(piece, CoreBall):
        return count_ball(N, norm, piece.radius, budget=budget)
    return (count_ball(N, norm, piece.r_out, budget=budget)
            - count_ball(N, norm, piece.r_in, closed=True, budget=budget))


def _piece_center_count(cov_a, i, N, norm):
    return count_in_piece(cov_a.piece(i), N, norm)


def weak_subordination_counts(cov_a: Covering, cov_b: Covering, window=None,
                              method="verdict", rows=None, unknown_as_edge=False):
    """Number of ``b`` pieces meeting each ``a`` piece.

    Parameters
    ----------
    method : {"verdict", "centers"}
        ``"verdict"`` runs :func:`intersect` on all candidate pairs and
        counts certified intersections (unknown verdicts are reported
        separately and only counted when ``unknown_as_edge``).
        ``"centers"`` counts the ``b`` lattice points lying inside each
        ``a`` piece; for a ball family every such center is its own
        intersection witness, so this is a certified lower bound that scales
        to large pieces.
    rows : array_like, optional
        Rows of ``cov_a`` to evaluate; default all pieces in the window.
    """
    _check_pair(cov_a, cov_b)
    if rows is None:
        rows = np.flatnonzero(cov_a.interior(window))
    rows = np.asarray(rows, dtype=int)
    counts = np.zeros(len(rows), dtype=np.int64)
    unknown = np.zeros(len(rows), dtype=np.int64)
    if method == "centers":
        if cov_b.family not in ("uniform",):
            raise WeightMismatch("center counting needs a uniform ball covering as cov_b")
        for t, i in enumerate(rows):
            counts[t] = _piece_center_count(cov_a, i, cov_b.lattice, cov_b.norm)
        return SubordinationCounts(rows, counts, unknown, method)
    norm = cov_a.norm
    G = cov_a.group
    c_safe = max(cov_a.c_safe, cov_b.c_safe)
    r1 = G.rank
    for t, i in enumerate(rows):
        pa = cov_a.piece(i)
        if cov_b.family == "besov":
            v = [intersect(pa, cov_b.piece(j), norm, c_safe).kind for j in range(len(cov_b))]
        else:
            if isinstance(pa, Ball):
                ca, ra = pa.center, pa.radius
            else:
                ca, ra = np.zeros(G.dim), (pa.r_out if isinstance(pa, Shell) else pa.radius)
            reach = np.max(np.abs(cov_b.centers[:, :r1] - ca[:r1]), axis=1)
            cand = np.flatnonzero(reach < ra + cov_b.radii)
            if isinstance(pa, Ball):
                d = G.multiply(G.inverse(ca), cov_b.centers[cand])
                codes, _, _ = _ball_pairs(norm, d, ra, cov_b.radii[cand], c_safe)
                v = [_VERDICT_NAMES[int(c)] for c in codes]
            else:
                v = [intersect(pa, cov_b.piece(j), norm, c_safe).kind for j in cand]
        v = np.asarray(v)
        counts[t] = int((v == "yes").sum()) + (int((v == "unknown").sum()) if unknown_as_edge else 0)
        unknown[t] = int((v == "unknown").sum())
    return SubordinationCounts(rows, counts, unknown, method)


def moderate_weight_check(cov: Covering, weight, window=None, unknown_as_edge=False) -> float:
    """Largest ``w(i)/w(j)`` over intersecting pairs with ``i`` in the window."""
    if isinstance(weight, Dyadic) != (cov.family == "besov"):
        raise WeightMismatch("dyadic weights go with dyadic coverings and vice versa")
    if isinstance(weight, AlphaPoly):
        alpha = cov.params.get("alpha", 0.0)
        if abs(weight.alpha - alpha) > 1e-12:
            raise WeightMismatch(f"weight alpha {weight.alpha} differs from covering alpha {alpha}")
    w = weight(cov.index_norms())
    mask = cov.interior(window)
    A = cov.adjacency().tocoo()
    keep = mask[A.row] & ((A.data == YES) | (unknown_as_edge & (A.data == UNKNOWN)))
    if not keep.any():
        return 1.0
    return float(np.max(w[A.row[keep]] / w[A.col[keep]]))
