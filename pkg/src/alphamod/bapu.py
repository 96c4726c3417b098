"""Bounded admissible partitions of unity sampled on frequency grids.

Two constructions are provided.  For a lattice covering ``{B(c_k, r_k)}`` the
members are ``psi_k = g_k / sum_l g_l`` with ``g_k(xi) = eta(||c_k^{-1} xi|| / r_k)``.
For the dyadic covering the members are ``psi_m = Phi_m / (Phi_{m-1} + Phi_m +
Phi_{m+1})`` with radial profiles ``Phi_m(x) = h1(2^(1-m) ||x||)`` and a core
profile ``Phi_0 = h0(||x||)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.sparse as sp

from ._errors import BudgetExceeded, DenominatorVanishes, EmptyWindow, StepUnsupported, UnknownIndex
from .covering import Covering, _piece_boxes, membership
from .grid import GridFunction, GridSpec, idft, lp_norm
from .quasinorm import sample_unit_sphere

__all__ = [
    "bump_profile",
    "smooth_step",
    "Bapu",
    "build_alpha_bapu",
    "build_besov_bapu",
    "validate_bapu",
    "export_bapu",
    "load_bapu_members",
]

ENTRY_BUDGET = 60_000_000
CHUNK = 1 << 20


def bump_profile(t):
    """``eta(t) = exp(-1/(1-t^2))`` on ``|t| < 1``, zero elsewhere."""
    t = np.asarray(t, dtype=float)
    inside = np.abs(t) < 1.0
    u = np.where(inside, 1.0 - t * t, 1.0)
    return np.where(inside, np.exp(-1.0 / u), 0.0)


def smooth_step(t):
    """Smooth monotone step, 0 for ``t <= 0`` and 1 for ``t >= 1``."""
    t = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
    a = np.where(t > 0, np.exp(-1.0 / np.where(t > 0, t, 1.0)), 0.0)
    b = np.where(t < 1, np.exp(-1.0 / np.where(t < 1, 1.0 - t, 1.0)), 0.0)
    return a / (a + b)


def _h0(rho):
    # 1 on [0, 3/2], 0 from 2 on
    return 1.0 - smooth_step(2.0 * (rho - 1.5))


def _h1(rho):
    # supported in (1, 4), identically 1 on [3/2, 7/2]
    return smooth_step(2.0 * (rho - 1.0)) * (1.0 - smooth_step(2.0 * (rho - 3.5)))


def _dyadic_profiles(rho, m_top):
    """``Phi_m(rho)`` for ``m = 0..m_top``, shape ``(m_top + 1,) + rho.shape``."""
    out = [_h0(rho)]
    out += [_h1(2.0 ** (1 - m) * rho) for m in range(1, m_top + 1)]
    return np.stack(out)


@dataclass(eq=False)
class Bapu:
    """Partition of unity sampled on the frequency grid.

    Attributes
    ----------
    covering : Covering
    grid : GridSpec
    rows : ndarray
        Covering rows of the stored members.
    psi : scipy.sparse.csr_matrix
        Member values, shape ``(len(rows), grid.size)``.
    window_mask : ndarray of bool
        Grid points on which the partition identity is guaranteed.
    record : dict
        Normalisation record (profile, radii, smallest window denominator).
    """

    covering: Covering
    grid: GridSpec
    rows: np.ndarray
    psi: sp.csr_matrix
    window_mask: np.ndarray
    record: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.rows)

    @property
    def family(self) -> str:
        return self.covering.family

    def member_position(self, index) -> int:
        """Position of a covering index among the stored members."""
        row = self.covering.position(index)
        hit = np.flatnonzero(self.rows == row)
        if not len(hit):
            raise UnknownIndex(f"index {index!r} has no grid support")
        return int(hit[0])

    def values(self, pos) -> np.ndarray:
        return np.asarray(self.psi[pos].todense()).reshape(self.grid.shape)

    def member(self, index) -> GridFunction:
        """Member ``psi_index`` as a frequency-domain grid function."""
        return GridFunction(self.grid, self.values(self.member_position(index)), "frequency")

    def index_of(self, pos):
        idx = self.covering.indices[self.rows[pos]]
        return int(idx) if np.ndim(idx) == 0 else tuple(int(v) for v in idx)

    def evaluate(self, points, positions=None) -> np.ndarray:
        """Member values at arbitrary frequency points, shape ``(members, m)``."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        positions = np.arange(len(self)) if positions is None else np.asarray(positions)
        if self.family == "besov":
            m_top = self.record["m_top"]
            phi = _dyadic_profiles(self.covering.norm.value(pts), m_top + 1)
            return np.stack([_dyadic_member(phi, int(m)) for m in self.covering.indices[self.rows[positions]]])
        cov = self.covering
        lo, hi = self.record["_boxes"]
        near = np.flatnonzero(np.all((lo <= pts.max(axis=0)) & (hi >= pts.min(axis=0)), axis=1))
        g = _alpha_g(cov, near, pts)
        den = g.sum(axis=0)
        pos_rows = self.rows[positions]
        where = np.searchsorted(near, pos_rows)
        out = np.zeros((len(positions), len(pts)))
        ok = (where < len(near)) & (near[np.minimum(where, len(near) - 1)] == pos_rows)
        safe = np.where(den > 0, den, 1.0)
        out[ok] = g[where[ok]] / safe
        return out


def _dyadic_member(phi, m):
    below = phi[m - 1] if m >= 1 else 0.0
    den = below + phi[m] + phi[m + 1]
    return np.where(phi[m] > 0, phi[m] / np.where(den > 0, den, 1.0), 0.0)


def _alpha_g(cov, rows, pts):
    """Dense ``g_k(xi)`` for covering rows and points."""
    G = cov.group
    out = np.empty((len(rows), len(pts)))
    step = max(1, CHUNK // max(len(pts), 1))
    for s in range(0, len(rows), step):
        r = rows[s:s + step]
        z = G.multiply(G.inverse(cov.centers[r])[:, None, :], pts[None, :, :])
        out[s:s + step] = bump_profile(cov.norm.value(z) / cov.radii[r][:, None])
    return out


def _grid_range(axis_lo, axis_hi, grid):
    """Per-axis index ranges of grid frequencies inside ``[lo, hi]``."""
    L = np.asarray(grid.L)
    M = np.asarray(grid.M)
    a = np.clip(np.ceil(axis_lo * L + M // 2), 0, M)
    b = np.clip(np.floor(axis_hi * L + M // 2) + 1, 0, M)
    return a.astype(np.int64), np.maximum(b, a).astype(np.int64)


def _box_points(a, b, grid):
    """Flat indices of the grid sub-box ``[a, b)``."""
    axes = [np.arange(x, y) for x, y in zip(a, b)]
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.ravel_multi_index(tuple(m.ravel() for m in mesh), grid.shape)


def _sparse_g(cov, grid, pts, boxes):
    """Sparse matrix of ``g_k`` on grid points inside each piece box."""
    lo, hi = boxes
    a, b = _grid_range(lo, hi, grid)
    sizes = np.prod(b - a, axis=1)
    if int(sizes.sum()) > ENTRY_BUDGET:
        raise BudgetExceeded(f"partition needs {int(sizes.sum())} evaluations", needed=int(sizes.sum()))
    rows = np.flatnonzero(sizes > 0)
    G = cov.group
    data, ri, ci = [], [], []
    batch, acc = [], 0
    for i in list(rows) + [None]:
        if i is not None:
            batch.append(i)
            acc += int(sizes[i])
            if acc < CHUNK:
                continue
        if not batch:
            break
        cols = [_box_points(a[j], b[j], grid) for j in batch]
        rr = np.repeat(batch, [len(c) for c in cols])
        cc = np.concatenate(cols)
        z = G.multiply(G.inverse(cov.centers[rr]), pts[cc])
        v = bump_profile(cov.norm.value(z) / cov.radii[rr])
        keep = v > 0
        data.append(v[keep])
        ri.append(rr[keep])
        ci.append(cc[keep])
        batch, acc = [], 0
    if not data:
        return sp.csr_matrix((len(cov), grid.size))
    return sp.csr_matrix((np.concatenate(data), (np.concatenate(ri), np.concatenate(ci))),
                         shape=(len(cov), grid.size))


def _normalise(g, mask, grid, pts):
    den = np.asarray(g.sum(axis=0)).ravel()
    bad = mask & ~(den > 0)
    if bad.any():
        w = pts[np.argmax(bad)]
        raise DenominatorVanishes(f"partition denominator vanishes at frequency {w.tolist()}",
                                  witness=w)
    inv = np.where(den > 0, 1.0 / np.where(den > 0, den, 1.0), 0.0)
    return sp.csr_matrix(g @ sp.diags(inv)), den


def build_alpha_bapu(cov: Covering, grid: GridSpec, r1: float) -> Bapu:
    """Partition subordinate to a lattice (uniform or alpha) covering.

    Parameters
    ----------
    cov : Covering
        Family ``"uniform"`` or ``"alpha"`` with radius parameter ``r``.
    grid : GridSpec
    r1 : float
        Inner radius, ``0 < r1 < r``.  The shrunken balls ``B(c_k, r_k r1/r)``
        must still cover the window, so that the denominator is bounded
        below by ``eta(r1/r)``.

    Raises
    ------
    DenominatorVanishes
        With ``info["witness"]``, a window frequency that the shrunken family
        misses.
    StepUnsupported
        For groups of step three or more.
    """
    if cov.family not in ("uniform", "alpha"):
        raise UnknownIndex(f"expected a lattice covering, got family {cov.family!r}")
    if cov.group.step > 2:
        raise StepUnsupported("lattice partitions are only built for step at most two")
    r = float(cov.params.get("R", cov.params.get("r")))
    if not 0 < r1 < r:
        raise DenominatorVanishes(f"need 0 < r1 < r = {r}, got r1 = {r1}")
    if grid.n != cov.group.dim:
        raise UnknownIndex("grid dimension differs from the group dimension")
    pts = grid.freq_points()
    boxes = _piece_boxes(cov)
    g = _sparse_g(cov, grid, pts, boxes)
    mask = cov.window.contains(cov.norm, pts)
    floor = float(bump_profile(r1 / r))
    gmax = np.asarray(g.max(axis=0).todense()).ravel()
    bad = mask & (gmax < floor * (1.0 - 1e-12))
    if bad.any():
        w = pts[np.argmax(bad)]
        raise DenominatorVanishes(
            f"frequency {w.tolist()} is not covered by the balls shrunk to r1 = {r1}", witness=w)
    psi, den = _normalise(g, mask, grid, pts)
    rows = np.flatnonzero(np.diff(psi.indptr) > 0)
    record = {
        "profile": "eta(||c^-1 xi|| / r_k)",
        "r": r,
        "r1": float(r1),
        "eta_r1": floor,
        "min_window_denominator": float(den[mask].min()) if mask.any() else None,
        "_boxes": boxes,
    }
    return Bapu(cov, grid, rows, psi[rows], mask, record)


def besov_cap(norm, grid: GridSpec, m_max: int) -> int:
    """Largest ``m <= m_max`` whose shell box ``||x|| < 2^(m+1)`` fits the grid."""
    ext = grid.freq_extent
    m = int(m_max)
    while m >= 0 and np.any(norm.box_bound(2.0 ** (m + 1)) >= ext):
        m -= 1
    return m


def build_besov_bapu(cov: Covering, grid: GridSpec) -> Bapu:
    """Dyadic partition ``psi_m = Phi_m / (Phi_{m-1} + Phi_m + Phi_{m+1})``.

    The top shell is capped so that its enclosing box fits inside the
    frequency extent of ``grid`` (see :func:`besov_cap`).
    """
    if cov.family != "besov":
        raise UnknownIndex(f"expected a dyadic covering, got family {cov.family!r}")
    m_top = besov_cap(cov.norm, grid, cov.params["m_max"])
    if m_top < 2:
        raise EmptyWindow("grid frequency extent too small for a dyadic partition")
    pts = grid.freq_points()
    rho = cov.norm.value(pts)
    phi = _dyadic_profiles(rho, m_top + 1)
    den = phi.sum(axis=0)
    mask = rho < 2.0 ** m_top
    bad = mask & ~(den > 0)
    if bad.any():
        w = pts[np.argmax(bad)]
        raise DenominatorVanishes(f"partition denominator vanishes at frequency {w.tolist()}",
                                  witness=w)
    psi = sp.csr_matrix(np.stack([_dyadic_member(phi, m) for m in range(m_top + 1)]))
    rows = np.arange(m_top + 1)
    record = {
        "profile": "h0 / h1 dyadic",
        "m_top": int(m_top),
        "m_max": int(cov.params["m_max"]),
        "min_window_denominator": float(den[mask].min()) if mask.any() else None,
    }
    return Bapu(cov, grid, rows, psi, mask, record)


def _leakage(b: Bapu) -> float:
    pts = b.grid.freq_points()
    worst = 0.0
    A = b.psi.tocsr()
    for pos in range(len(b)):
        cols = A.indices[A.indptr[pos]:A.indptr[pos + 1]]
        vals = A.data[A.indptr[pos]:A.indptr[pos + 1]]
        if not len(cols):
            continue
        inside = membership(b.covering.piece(b.rows[pos]), b.covering.norm, pts[cols])
        if (~inside).any():
            worst = max(worst, float(np.abs(vals[~inside]).max()))
    return worst


def _refined_l1(b: Bapu, pos, factor):
    if factor == 1:
        return lp_norm(idft(GridFunction(b.grid, b.values(pos), "frequency")), 1)
    g = GridSpec(tuple(l * factor for l in b.grid.L), tuple(m * factor for m in b.grid.M))
    vals = np.zeros(g.size)
    cols = b.psi[pos].indices
    src = b.grid.freq_points()[cols]
    lo, hi = src.min(axis=0) - 1.0 / np.asarray(b.grid.L), src.max(axis=0) + 1.0 / np.asarray(b.grid.L)
    a, e = _grid_range(lo, hi, g)
    idx = _box_points(a, e, g)
    vals[idx] = b.evaluate(g.freq_points()[idx], [pos])[0]
    return lp_norm(idft(GridFunction(g, vals, "frequency")), 1)


def validate_bapu(b: Bapu, p_grid_refinement: int = 1, members: int = 5, seed: int = 0,
                  random_points: int = 2000) -> dict:
    """Check the partition axioms on the grid and at random window points.

    Returns
    -------
    dict
        ``partition_error`` (grid), ``partition_error_random``, ``negativity``,
        ``excess_over_one``, ``leakage``, ``l1_members`` and ``l1_max``.  The
        L^1 norms of the inverse transforms are numerical evidence for a
        uniform bound, not a proof of one.
    """
    rng = np.random.default_rng(seed)
    total = np.asarray(b.psi.sum(axis=0)).ravel()
    mask = b.window_mask
    part = float(np.abs(total[mask] - 1.0).max()) if mask.any() else float("nan")
    data = b.psi.data
    neg = float(max(0.0, -data.min())) if len(data) else 0.0
    over = float(max(0.0, data.max() - 1.0)) if len(data) else 0.0

    cov = b.covering
    if cov.family == "besov":
        # log-uniform radii so that every shell is probed
        u = sample_unit_sphere(cov.norm, rng, random_points)
        rad = np.exp(rng.uniform(np.log(0.25), np.log(2.0 ** b.record["m_top"]), random_points))
        x = cov.group.dilate(rad, u)
    else:
        x = cov.window.sample(cov.norm, rng, random_points)
    inside_grid = np.all(np.abs(x) < b.grid.freq_extent, axis=1)
    x = x[inside_grid]
    rnd = float(np.abs(b.evaluate(x).sum(axis=0) - 1.0).max()) if len(x) else float("nan")

    interior = np.flatnonzero(cov.interior()[b.rows]) if cov.family != "besov" else np.arange(len(b))
    pick = np.sort(rng.choice(interior, size=min(members, len(interior)), replace=False))
    l1 = [float(_refined_l1(b, int(p), int(p_grid_refinement))) for p in pick]
    return {
        "partition_error": part,
        "partition_error_random": rnd,
        "negativity": neg,
        "excess_over_one": over,
        "leakage": _leakage(b),
        "l1_members": [b.index_of(int(p)) for p in pick],
        "l1_norms": l1,
        "l1_max": max(l1) if l1 else float("nan"),
        "l1_label": "numerical evidence",
        "window_points": int(mask.sum()),
        "members": len(b),
    }


def export_bapu(b: Bapu, stem, positions=None):
    """Write member values to ``stem.npy`` and a JSON sidecar ``stem.json``."""
    stem = Path(stem)
    positions = np.arange(len(b)) if positions is None else np.asarray(positions)
    arr = np.stack([b.values(int(p)) for p in positions]) if len(positions) else np.zeros((0,) + b.grid.shape)
    np.save(stem.with_suffix(".npy"), arr)
    side = {
        "grid": b.grid.to_dict(),
        "domain": "frequency",
        "family": b.family,
        "indices": [b.index_of(int(p)) for p in positions],
        "record": {k: v for k, v in b.record.items() if not k.startswith("_")},
    }
    stem.with_suffix(".json").write_text(json.dumps(side, sort_keys=True, indent=1))
    return stem.with_suffix(".npy"), stem.with_suffix(".json")


def load_bapu_members(stem):
    """Read back ``(values, sidecar)`` written by :func:`export_bapu`."""
    stem = Path(stem)
    return np.load(stem.with_suffix(".npy")), json.loads(stem.with_suffix(".json").read_text())
