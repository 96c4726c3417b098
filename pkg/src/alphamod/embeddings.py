"""Affine structure of coverings, Engel witnesses and tensor embeddings."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from ._errors import (
    DimensionMismatch,
    GridIncompatible,
    InclusionFailed,
    NotBandLimited,
    StepUnsupported,
    UnknownIndex,
    WrongGroup,
)
from .bapu import Bapu, bump_profile
from .covering import YES, Covering
from .grid import GridFunction, GridSpec, dft, idft
from .groups import StratifiedGroup, engel_bch, engel_paper_law
from .lattice import Lattice
from .metric import IntersectionGraph, chain_distance, fit_distortion
from .modnorm import BAND_TOL, _block_norms, _spectrum, spectral_leak
from .quasinorm import QuasiNorm

__all__ = [
    "AffineMap",
    "piece_affine_map",
    "covering_affine_maps",
    "compatibility_sup",
    "EngelWitness",
    "engel_blowup_witness",
    "geometric_embed",
    "block_swap",
    "EssentialSupport",
    "essential_support",
    "EmbeddingReport",
    "embedding_distortion",
]


@dataclass(frozen=True, eq=False)
class AffineMap:
    """``x -> T x + b``."""

    linear: np.ndarray
    offset: np.ndarray

    @property
    def cond(self) -> float:
        return float(np.linalg.cond(self.linear))

    def __call__(self, x):
        return np.asarray(x, dtype=float) @ self.linear.T + self.offset


def _affine(G: StratifiedGroup, c, rho):
    """Map ``x -> c * D_rho(x)`` as a matrix (exact for step <= 2)."""
    if G.step > 2:
        raise StepUnsupported("left translation is not affine for step three or more; "
                              "see engel_blowup_witness")
    n = G.dim
    T = (np.eye(n) + 0.5 * G.ad_matrix(c)) * np.power(float(rho), G.degrees)[None, :]
    return AffineMap(T, np.asarray(c, dtype=float).copy())


def _check_image(norm, A: AffineMap, center, radius, samples, seed):
    rng = np.random.default_rng(seed)
    x = norm.sample_ball(rng, samples, 1.0)
    y = A(x)
    G = norm.group
    ok = norm.value(G.multiply(G.inverse(center), y)) < radius
    if not ok.all():
        raise InclusionFailed("affine image leaves the piece", witness=x[np.argmin(ok)])
    if not np.allclose(A(np.zeros(G.dim)), center, rtol=1e-12, atol=1e-12):
        raise InclusionFailed("affine map does not send 0 to the center")


def piece_affine_map(N: Lattice, norm: QuasiNorm, alpha: float, r: float, k,
                     samples: int = 200, seed: int = 0) -> AffineMap:
    """Affine map of the unit ball onto the piece of lattice index ``k``.

    The piece is ``B(c_k, r ||k||^beta)`` with ``beta = alpha/(1-alpha)`` and
    ``c_k = D_{||k||^beta}(k)``; the map is ``x -> c_k * D_{r ||k||^beta}(x)``,
    i.e. ``T = (I + ad(c_k)/2) diag(rho^v_j)`` and ``b = c_k``.  The image of
    ``samples`` random points of ``B(0, 1)`` is checked to lie in the piece.

    Raises
    ------
    StepUnsupported
        Step three or more.
    InclusionFailed
        A sample escapes (should not happen).
    """
    G = N.group
    if G.step > 2:
        raise StepUnsupported("affine piece maps need step at most two")
    kp = N.point(k)
    kn = float(norm.value(kp))
    beta = alpha / (1.0 - alpha)
    if kn == 0 and alpha > 0:
        raise UnknownIndex("the origin is not an index of an alpha covering with alpha > 0")
    s = kn ** beta if kn > 0 else 1.0
    c = G.dilate(s, kp)
    A = _affine(G, c, r * s)
    _check_image(norm, A, c, r * s, samples, seed)
    return A


def covering_affine_maps(cov: Covering, rows=None, samples: int = 0, seed: int = 0):
    """Affine maps of all (or selected) pieces of a covering.

    Ball pieces use ``x -> c * D_radius(x)``.  Dyadic pieces use
    ``T_m = diag(2^((m-1) v_j))``, ``b = 0`` (the shell ``m`` is the image of
    shell one under ``D_{2^(m-1)}``).
    """
    rows = np.arange(len(cov)) if rows is None else np.asarray(rows)
    G = cov.group
    out = {}
    for i in rows:
        if cov.family == "besov":
            m = int(cov.indices[i])
            T = np.diag(np.power(2.0, (m - 1.0) * G.degrees))
            out[int(i)] = AffineMap(T, np.zeros(G.dim))
        else:
            A = _affine(G, cov.centers[i], cov.radii[i])
            if samples:
                _check_image(cov.norm, A, cov.centers[i], cov.radii[i], samples, seed)
            out[int(i)] = A
    return out


def compatibility_sup(cov: Covering, maps=None, window=None) -> float:
    """``max ||T_i^-1 T_j||_2`` over intersecting pairs centred in the window."""
    inside = cov.interior(window)
    A = sp.triu(cov.adjacency_within(inside), k=1).tocoo()
    keep = (A.data == YES) & inside[A.row] & inside[A.col]
    pi, pj = A.row[keep], A.col[keep]
    if maps is None:
        maps = covering_affine_maps(cov, np.unique(np.concatenate([pi, pj])))
    if not len(pi):
        return 1.0
    Ti = np.stack([maps[int(i)].linear for i in pi])
    Tj = np.stack([maps[int(j)].linear for j in pj])
    best = 0.0
    for s in range(0, len(pi), 20000):
        P = np.linalg.solve(Ti[s:s + 20000], Tj[s:s + 20000])
        Q = np.linalg.solve(Tj[s:s + 20000], Ti[s:s + 20000])
        best = max(best, float(np.linalg.norm(P, 2, axis=(1, 2)).max()),
                   float(np.linalg.norm(Q, 2, axis=(1, 2)).max()))
    return best


# Engel witnesses -------------------------------------------------------------

@dataclass(frozen=True)
class EngelWitness:
    """Witness table.  ``values[i]`` belongs to ``n_list[i]``."""

    law: str
    n_list: tuple
    values: tuple
    slope: float

    def to_csv(self):
        lines = ["n,value"]
        lines += [f"{n},{v!r}" for n, v in zip(self.n_list, self.values)]
        return "\n".join(lines) + "\n"

    def to_json(self):
        return json.dumps(self.__dict__, sort_keys=True)


def _jacobian_at_zero(G, k, h=1e-3):
    n = G.dim
    E = np.eye(n) * h
    return ((G.multiply(k, E) - G.multiply(k, -E)) / (2.0 * h)).T


def engel_blowup_witness(law: str = "paper_law", n_list=(1, 2, 4, 8, 16, 32, 64),
                         group: StratifiedGroup | None = None, h: float = 1.0) -> EngelWitness:
    """Diagnostics along ``k' = (12n, 2n, n, n)``.

    ``paper_law``: ``||T_{k'} T_k^-1||_2`` with ``T_k`` the Jacobian at the
    identity of ``y -> k * y`` and ``k = (12, 2, 1, 1)``, plus the log-log
    slope in ``n``.  ``full_bch``: the largest second difference
    ``||f(h e_j) - 2 f(0) + f(-h e_j)||`` of ``f(y) = k' * y`` over
    coordinate directions (nonzero means left translation is not affine).

    Parameters
    ----------
    group : StratifiedGroup, optional
        Override the group (any four-dimensional group, e.g. an abelian
        control).  Defaults to the Engel group with the requested law.

    Raises
    ------
    WrongGroup
        ``group`` is not four-dimensional.
    """
    n_list = tuple(int(n) for n in n_list)
    if len(n_list) < 2 or any(b <= a for a, b in zip(n_list, n_list[1:])):
        raise DimensionMismatch("n_list must be increasing with at least two entries")
    if law not in ("paper_law", "full_bch"):
        raise DimensionMismatch(f"unknown law {law!r}")
    if group is None:
        group = engel_paper_law() if law == "paper_law" else engel_bch()
    if group.dim != 4:
        raise WrongGroup("the Engel witnesses need a four-dimensional group")
    base = np.array([12.0, 2.0, 1.0, 1.0])
    vals = []
    if law == "paper_law":
        Tk = _jacobian_at_zero(group, base)
        for n in n_list:
            Tn = _jacobian_at_zero(group, n * base)
            vals.append(float(np.linalg.norm(Tn @ np.linalg.inv(Tk), 2)))
    else:
        E = np.eye(4) * h
        for n in n_list:
            k = n * base
            d2 = group.multiply(k, E) - 2.0 * group.multiply(k, np.zeros(4)) + group.multiply(k, -E)
            vals.append(float(np.linalg.norm(d2, axis=1).max()))
    v = np.asarray(vals)
    if np.all(v > 0):
        slope = float(np.polyfit(np.log(n_list), np.log(v), 1)[0])
    else:
        slope = 0.0
    return EngelWitness(law, n_list, tuple(vals), slope)


# tensor embedding ------------------------------------------------------------

def _fit_axes(src: GridSpec, dst: GridSpec, k: int):
    if dst.n < k:
        raise GridIncompatible("target grid has fewer axes than the source")
    for j in range(k):
        if abs(src.L[j] - dst.L[j]) > 1e-12 * src.L[j]:
            raise GridIncompatible(f"axis {j}: frequency spacings differ")
        if dst.M[j] < src.M[j]:
            raise GridIncompatible(f"axis {j}: target frequency extent is smaller")


def geometric_embed(f: GridFunction, G: StratifiedGroup, target: GridSpec,
                    xi_halfwidth: float = 0.5) -> GridFunction:
    """Spectral tensor embedding ``F f = F^-1(F_k f (w_1..w_k) xi(w_{k+1}) ... xi(w_n))``.

    ``xi(w) = eta(w / xi_halfwidth)``; the source occupies the first ``k``
    (first-layer) coordinates.  The output lives in the same domain as ``f``.

    Raises
    ------
    GridIncompatible
        Frequency spacings differ or the target extent is smaller.
    """
    src = f.grid
    k = src.n
    if G.rank < k or G.dim != target.n:
        raise GridIncompatible("group rank or dimension does not fit the source")
    _fit_axes(src, target, k)
    F = f.values if f.domain == "frequency" else dft(f).values
    out = np.zeros(target.shape, dtype=complex)
    sl = tuple(slice((mt - ms) // 2, (mt - ms) // 2 + ms)
               for ms, mt in zip(src.M, target.M[:k]))
    out[sl + (slice(None),) * (target.n - k)] = F.reshape(src.shape + (1,) * (target.n - k))
    axes = target.freq_axes()
    for j in range(k, target.n):
        shape = [1] * target.n
        shape[j] = target.M[j]
        out = out * bump_profile(axes[j] / xi_halfwidth).reshape(shape)
    res = GridFunction(target, out, "frequency")
    return res if f.domain == "frequency" else idft(res)


def block_swap(f: GridFunction, a: float, b: float, halfwidth: float) -> GridFunction:
    """Swap the spectrum near ``a`` with the spectrum near ``b`` (one axis).

    Used as a control map that is linear and isometric on ``L^2`` but moves
    frequency content far away.
    """
    g = f.grid
    if g.n != 1:
        raise GridIncompatible("block_swap acts on one-dimensional grids")
    F = (f.values if f.domain == "frequency" else dft(f).values).copy()
    w = g.freq_axes()[0]
    ia = np.flatnonzero(np.abs(w - a) <= halfwidth)
    ib = np.flatnonzero(np.abs(w - b) <= halfwidth)
    if len(ia) != len(ib) or (set(ia) & set(ib)):
        raise GridIncompatible("swap blocks must be disjoint and of equal size")
    F[ia], F[ib] = F[ib].copy(), F[ia].copy()
    res = GridFunction(g, F, "frequency")
    return res if f.domain == "frequency" else idft(res)


# essential support -------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class EssentialSupport:
    """Members with ``eps_k > tol * max eps``."""

    indices: list
    rows: np.ndarray
    tol: float
    eps: np.ndarray

    @property
    def dominant_row(self) -> int:
        return int(self.rows[np.argmax(self.eps[self.rows])]) if len(self.rows) else -1


def essential_support(f: GridFunction, cov: Covering, b: Bapu, p=2.0, tol=1e-8,
                      band_tol=BAND_TOL) -> EssentialSupport:
    """Pieces carrying a non-negligible block of ``f``.

    ``eps`` is indexed by covering row; ``rows`` lists the support.
    """
    if b.covering is not cov:
        raise UnknownIndex("partition was built for a different covering")
    F = _spectrum(f, b)
    leak = spectral_leak(GridFunction(b.grid, F, "frequency"), b)
    if leak > band_tol:
        raise NotBandLimited(f"spectral mass fraction {leak:.3g} outside the window", leak=leak)
    e = _block_norms(F, b, p)
    eps = np.zeros(len(cov))
    eps[b.rows] = e
    top = eps.max() if len(eps) else 0.0
    rows = np.flatnonzero(eps > tol * top) if top > 0 else np.zeros(0, dtype=int)
    idx = [b.index_of(int(np.flatnonzero(b.rows == r)[0])) for r in rows]
    return EssentialSupport(idx, rows, float(tol), eps)


@dataclass(eq=False)
class EmbeddingReport:
    """Distortion fit of an embedding on a test family."""

    fit: object
    d_src: np.ndarray
    d_dst: np.ndarray
    src_points: np.ndarray
    dst_points: np.ndarray
    star_levels: list = field(default_factory=list)

    def to_json(self):
        out = dict(self.fit.__dict__)
        out.update(pairs=int(len(self.d_src)), star_levels=[float(s) for s in self.star_levels])
        return json.dumps(out, sort_keys=True)


def _star_level(cov: Covering, rows, dom):
    # intersection steps from the dominant piece to the farthest support piece
    A = cov.adjacency()
    A = sp.csr_matrix(((A.data == YES).astype(np.int8), A.indices, A.indptr), shape=A.shape)
    d = dijkstra(A, unweighted=True, indices=[dom], limit=8)[0]
    return float(np.max(d[rows])) if len(rows) else 0.0


def embedding_distortion(family, embed, src: tuple, dst: tuple, L_cap=3.0, C_cap=3.0,
                         tol=1e-8) -> EmbeddingReport:
    """Fit ``(L, C)`` between chain distances before and after an embedding.

    Each test function is represented by the center of the piece carrying
    its largest block, before (``src``) and after (``dst``) the embedding.

    Parameters
    ----------
    family : sequence of GridFunction
        Source test functions with compact spectra.
    embed : callable
        Maps a source function to a target function.
    src, dst : tuple
        ``(covering, bapu, graph)`` for source and target.

    Raises
    ------
    WindowTooSmall
        From the chain distance on windowed graphs.
    """
    cs, bs, gs = src
    cd, bd, gd = dst
    xs, zs, levels = [], [], []
    for f in family:
        es = essential_support(f, cs, bs, tol=tol)
        ed = essential_support(embed(f), cd, bd, tol=tol)
        xs.append(cs.centers[es.dominant_row])
        zs.append(cd.centers[ed.dominant_row])
        levels.append(_star_level(cs, es.rows, es.dominant_row))
    xs, zs = np.asarray(xs), np.asarray(zs)
    ds, dd = [], []
    for i in range(len(xs)):
        for j in range(i + 1, len(xs)):
            ds.append(chain_distance(gs, xs[i], xs[j]))
            dd.append(chain_distance(gd, zs[i], zs[j]))
    fit = fit_distortion(ds, dd, L_cap, C_cap)
    return EmbeddingReport(fit, np.asarray(ds), np.asarray(dd), xs, zs, levels)
