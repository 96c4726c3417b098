"""Chain metrics of coverings and quasi-isometry fits.

The chain distance ``d(x, y)`` is the least number of pieces in a chain of
pairwise intersecting pieces joining ``x`` to ``y``.  On a finite window it
is computed by breadth-first search on the intersection graph, with a guard
that refuses answers a longer window could change.  Uniform lattice
coverings are left-invariant, so their intersection graph is a Cayley graph
of the lattice and distances are computed exactly without any window.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from ._errors import (
    DimensionMismatch,
    EmptyWindow,
    MapLeavesWindow,
    PointOutsideWindow,
    WindowTooSmall,
)
from .covering import NO, UNKNOWN, YES, Covering, Window, _as_window, _ball_pairs
from .lattice import enumerate_ball

__all__ = [
    "IntersectionGraph",
    "build_graph",
    "chain_distance",
    "DistortionReport",
    "fit_distortion",
    "distortion_report",
]


class _CayleyBall:
    """Word lengths on a lattice for a symmetric generating set.

    Grows a breadth-first ball around the identity on demand.  Points are
    stored as packed integer keys.
    """

    def __init__(self, N, generators):
        self.N = N
        self.gens = np.asarray(generators, dtype=np.int64)
        n = N.group.dim
        self._bits = 63 // n
        self._off = 1 << (self._bits - 1)
        origin = np.zeros((1, n), dtype=np.int64)
        self._keys = self._pack(origin)
        self._dist = np.zeros(1, dtype=np.int64)
        self._frontier = origin
        self.radius = 0

    def _pack(self, k):
        k = np.asarray(k, dtype=np.int64) + self._off
        if np.any(k < 0) or np.any(k >= (1 << self._bits)):
            raise MapLeavesWindow("lattice point too large for word-length packing")
        out = np.zeros(len(k), dtype=np.int64)
        for j in range(k.shape[1]):
            out = (out << self._bits) | k[:, j]
        return out

    def _grow(self):
        G, gam = self.N.group, self.N.gamma
        f = self._frontier * gam
        cand = G.multiply(f[:, None, :], (self.gens * gam)[None, :, :]).reshape(-1, G.dim)
        cand = self.N.integer_coords(cand)
        keys, first = np.unique(self._pack(cand), return_index=True)
        new = ~np.isin(keys, self._keys, assume_unique=True)
        self.radius += 1
        self._frontier = cand[first[new]]
        keys = np.concatenate([self._keys, keys[new]])
        dist = np.concatenate([self._dist, np.full(int(new.sum()), self.radius)])
        order = np.argsort(keys)
        self._keys, self._dist = keys[order], dist[order]

    def _lookup(self, key):
        pos = np.minimum(np.searchsorted(self._keys, key), len(self._keys) - 1)
        hit = self._keys[pos] == key
        return np.where(hit, self._dist[pos], -1)

    def _points(self):
        # unpack stored keys back to integer coordinates
        n = self.N.group.dim
        mask = (1 << self._bits) - 1
        out = np.empty((len(self._keys), n), dtype=np.int64)
        k = self._keys.copy()
        for j in range(n - 1, -1, -1):
            out[:, j] = (k & mask) - self._off
            k = k >> self._bits
        return out

    def length(self, k, max_points=3_000_000):
        """Word lengths of integer lattice points ``k`` (shape (m, n)).

        Points outside the stored ball ``B(r)`` are resolved by the join
        ``|g| = min_{h in B(r), g h in B(r)} |g h| + |h|``, exact whenever
        ``|g| <= 2r``; an empty join proves ``|g| > 2r`` and the ball grows.
        """
        k = np.atleast_2d(np.asarray(k, dtype=np.int64))
        out = self._lookup(self._pack(k))
        G, gam = self.N.group, self.N.gamma
        for i in np.flatnonzero(out < 0):
            while True:
                P = self._points()
                gh = self.N.integer_coords(G.multiply(k[i] * gam, P * gam))
                inside = np.all(np.abs(gh) < (1 << (self._bits - 1)), axis=1)
                d = np.full(len(P), -1)
                d[inside] = self._lookup(self._pack(gh[inside]))
                ok = d >= 0
                if ok.any():
                    out[i] = int((d[ok] + self._dist[ok]).min())
                    break
                if len(self._keys) > max_points or not len(self._frontier):
                    raise WindowTooSmall("word length exceeds the searchable ball",
                                         radius=self.radius)
                self._grow()
        return out


@dataclass(eq=False)
class IntersectionGraph:
    """Intersection graph of a windowed covering.

    Attributes
    ----------
    cov : Covering
    window : Window
        Points must lie in this window to be located.
    nodes : ndarray
        Covering rows of the pieces in the graph (all built pieces).
    interior : ndarray of bool
        Pieces whose complete neighbour lists are known.
    adjacency : scipy.sparse.csr_matrix
        Symmetric 0/1 adjacency over ``nodes``.
    unknown_edges : ndarray, shape (m, 2)
        Pairs whose intersection verdict is unknown.
    unknown_as_edge : bool
    """

    cov: Covering
    window: Window
    nodes: np.ndarray
    interior: np.ndarray
    adjacency: sp.csr_matrix
    unknown_edges: np.ndarray
    unknown_as_edge: bool
    _cayley: object = field(default=None, repr=False)
    _to_margin: object = field(default=None, repr=False)

    @property
    def is_cayley(self) -> bool:
        return self.cov.family == "uniform"

    def locate(self, x):
        """Rows of all pieces containing ``x``.

        Raises
        ------
        PointOutsideWindow
            ``x`` is outside the window or in no piece.
        """
        x = np.asarray(x, dtype=float)
        if x.shape != (self.cov.group.dim,):
            raise DimensionMismatch(f"expected a point of dimension {self.cov.group.dim}")
        if not self.is_cayley and not self.window.contains(self.cov.norm, x):
            raise PointOutsideWindow(f"point {x.tolist()} is outside the window", point=x)
        if self.is_cayley:
            N = self.cov.lattice
            pts = enumerate_ball(N, self.cov.norm, self.cov.params["R"], center=x)
            if not len(pts):
                raise PointOutsideWindow(f"point {x.tolist()} lies in no piece", point=x)
            return N.integer_coords(pts)
        rows = self.cov.locate(x)
        if not len(rows):
            raise PointOutsideWindow(f"point {x.tolist()} lies in no piece", point=x)
        return rows

    def cayley(self):
        if self._cayley is None:
            gens = _uniform_generators(self.cov, self.unknown_as_edge)
            self._cayley = _CayleyBall(self.cov.lattice, gens)
        return self._cayley

    def margin_distance(self):
        """Edge distance from each node to the nearest non-interior node."""
        if self._to_margin is None:
            src = np.flatnonzero(~self.interior)
            if not len(src):
                self._to_margin = np.full(len(self.nodes), np.inf)
            else:
                self._to_margin = dijkstra(self.adjacency, unweighted=True,
                                           indices=src, min_only=True)
        return self._to_margin

    def to_csv(self):
        A = sp.triu(self.adjacency, k=1).tocoo()
        order = np.lexsort((A.col, A.row))
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["i", "j"])
        for r, c in zip(A.row[order], A.col[order]):
            w.writerow([int(self.nodes[r]), int(self.nodes[c])])
        return buf.getvalue()


def _uniform_generators(cov, unknown_as_edge):
    N = cov.lattice
    R = cov.params["R"]
    offs = enumerate_ball(N, cov.norm, cov.c_safe * 2.0 * R, budget=20_000_000)
    offs = offs[np.any(offs != 0, axis=1)]
    codes, _, _ = _ball_pairs(cov.norm, offs, R, R, cov.c_safe)
    keep = (codes == YES) | (unknown_as_edge & (codes == UNKNOWN))
    return N.integer_coords(offs[keep])


def build_graph(cov: Covering, window=None, unknown_as_edge: bool = False) -> IntersectionGraph:
    """Intersection graph of ``cov`` restricted to a window.

    Parameters
    ----------
    cov : Covering
    window : Window or float, optional
        Must lie inside the construction window; defaults to it.
    unknown_as_edge : bool
        Policy for unknown verdicts (default: not an edge).

    Raises
    ------
    EmptyWindow
        No piece is centred in the window.
    """
    window = _as_window(window) or cov.window
    interior = cov.interior(window)
    if not interior.any():
        raise EmptyWindow("no piece is centred inside the window")
    A = cov.adjacency()
    data = A.data
    keep = (data == YES) | (unknown_as_edge & (data == UNKNOWN))
    adj = sp.csr_matrix((keep.astype(np.int8), A.indices, A.indptr), shape=A.shape)
    adj.eliminate_zeros()
    U = sp.triu(A, k=1).tocoo()
    unk = np.column_stack([U.row, U.col])[U.data == UNKNOWN]
    return IntersectionGraph(cov, window, np.arange(len(cov)), interior, adj, unk,
                             bool(unknown_as_edge))


def chain_distance(graph: IntersectionGraph, x, y) -> int:
    """Chain distance between two points.

    Returns 0 when ``x == y`` and 1 when a single piece contains both.

    Raises
    ------
    PointOutsideWindow
        A point cannot be located.
    WindowTooSmall
        A chain leaving the built pieces could be shorter than the one found.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.array_equal(x, y):
        return 0
    P = graph.locate(x)
    Q = graph.locate(y)
    if graph.is_cayley:
        G, N = graph.cov.group, graph.cov.lattice
        gam = N.gamma
        # word length of p^{-1} q for every containing pair
        pq = G.multiply(G.inverse(P * gam)[:, None, :], (Q * gam)[None, :, :])
        d = graph.cayley().length(N.integer_coords(pq.reshape(-1, G.dim)))
        return int(d.min()) + 1
    D = dijkstra(graph.adjacency, unweighted=True, indices=P, min_only=True)
    best = float(D[Q].min())
    to_m = graph.margin_distance()
    # a chain through unbuilt pieces has at least to_m[P] + to_m[Q] + 2 edges
    bound = float(to_m[P].min() + to_m[Q].min() + 2)
    if not best <= bound:
        raise WindowTooSmall(
            f"shortest chain found has {best} edges but a chain leaving the window "
            f"could have {bound}", found=best, bound=bound)
    return int(best) + 1


@dataclass(frozen=True)
class DistortionReport:
    """Fitted quasi-isometry constants.

    ``fits`` is False when no grid pair within the caps covers all samples;
    ``L_est`` and ``C_est`` then hold the best pair at ``L_cap`` and
    ``max_violation`` the excess over ``C_cap``.
    """

    L_est: float
    C_est: float
    pairs: int
    max_violation: float
    fits: bool
    L_cap: float
    C_cap: float

    def to_json(self):
        return json.dumps(self.__dict__, sort_keys=True)


def fit_distortion(d_src, d_dst, L_cap=8.0, C_cap=20.0, L_step=0.25) -> DistortionReport:
    """Smallest integer ``C``, then smallest grid ``L``, with
    ``d/L - C <= d' <= L d + C`` for all pairs.

    Minimising the additive constant first makes the fit insensitive to
    the range of distances sampled, since ``L`` then tracks the asymptotic
    ratio of the two metrics.
    """
    d = np.asarray(d_src, dtype=float)
    dp = np.asarray(d_dst, dtype=float)
    if d.shape != dp.shape or not d.size:
        raise DimensionMismatch("need matching nonempty distance arrays")

    def L_min(C):
        with np.errstate(divide="ignore", invalid="ignore"):
            lo = np.where(d > 0, d / (dp + C), 0.0)
            lo = np.where((d > 0) & (dp + C <= 0), np.inf, lo)
            up = np.where(d > 0, (dp - C) / np.where(d > 0, d, 1.0), np.where(dp > C, np.inf, 0.0))
        need = max(float(np.max(lo)), float(np.max(up)), 1.0)
        return 1.0 + L_step * np.ceil((need - 1.0) / L_step - 1e-9)

    for C in range(int(np.floor(C_cap)) + 1):
        L = L_min(C)
        if L <= L_cap + 1e-12:
            return DistortionReport(float(L), float(C), int(d.size), 0.0, True,
                                    float(L_cap), float(C_cap))
    need = float(max(np.max(d / L_cap - dp), np.max(dp - L_cap * d), 0.0))
    return DistortionReport(float(L_cap), float(np.ceil(need - 1e-12)), int(d.size),
                            need - C_cap, False, float(L_cap), float(C_cap))


def distortion_report(fmap, graph_src: IntersectionGraph, graph_dst: IntersectionGraph, pairs,
                      L_cap=8.0, C_cap=20.0) -> DistortionReport:
    """Fit ``(L, C)`` for a point map between two chain metrics.

    Parameters
    ----------
    fmap : callable
        Maps a source point to a target point.
    pairs : iterable of (x, y)
        Sampled source point pairs.

    Raises
    ------
    MapLeavesWindow
        An image point cannot be located in the target window.
    """
    ds, dd = [], []
    for x, y in pairs:
        ds.append(chain_distance(graph_src, x, y))
        fx, fy = fmap(np.asarray(x, dtype=float)), fmap(np.asarray(y, dtype=float))
        try:
            dd.append(chain_distance(graph_dst, fx, fy))
        except PointOutsideWindow as e:
            raise MapLeavesWindow(f"image point leaves the target window: {e}") from e
    return fit_distortion(ds, dd, L_cap, C_cap)
