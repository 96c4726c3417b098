"""Coordinate-scaled integer lattices, ball enumeration and growth."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product as _iproduct

import numpy as np

from ._errors import DimensionMismatch, NonPositiveScale, NotClosed, RadiusTooLarge
from .groups import StratifiedGroup
from .quasinorm import QuasiNorm

__all__ = [
    "Lattice",
    "make_lattice",
    "default_lattice",
    "enumerate_ball",
    "count_ball",
    "growth_function",
    "GrowthResult",
]

MEMBER_TOL = 1e-9
POINT_BUDGET = 5_000_000


@dataclass(frozen=True, eq=False)
class Lattice:
    """The grid ``{(gamma_1 k_1, ..., gamma_n k_n) : k in Z^n}``.

    Use :func:`make_lattice` to obtain a lattice whose closure under the
    group law has been checked.
    """

    group: StratifiedGroup
    scales: tuple
    label: str = ""

    @property
    def gamma(self) -> np.ndarray:
        return np.asarray(self.scales, dtype=float)

    def integer_coords(self, x):
        """Nearest integer coordinates of (batched) points."""
        return np.rint(np.asarray(x, dtype=float) / self.gamma).astype(np.int64)

    def contains(self, x):
        """Membership test with relative tolerance ``1e-9``."""
        q = np.asarray(x, dtype=float) / self.gamma
        return np.all(np.abs(q - np.rint(q)) <= MEMBER_TOL * (1.0 + np.abs(q)), axis=-1)

    def point(self, k):
        return np.asarray(k, dtype=float) * self.gamma

    def __eq__(self, other):
        return (isinstance(other, Lattice) and self.group == other.group
                and tuple(self.scales) == tuple(other.scales))

    def __hash__(self):
        return hash((self.group, tuple(self.scales)))


def _window_points(n, w):
    pts = np.array(list(_iproduct(range(-w, w + 1), repeat=n)), dtype=np.int64)
    # small points first, positive directions before negative ones
    key = np.abs(pts).sum(axis=1)
    order = np.lexsort(tuple((-pts[:, j]) for j in range(n - 1, -1, -1)) + (key,))
    return pts[order]


def make_lattice(G: StratifiedGroup, scales, check_window: int = 2, label: str = "") -> Lattice:
    """Build a lattice and verify closure on a window.

    Every product ``a*b`` and inverse ``a^{-1}`` with integer parts of
    ``a, b`` in ``[-check_window, check_window]`` must lie in the lattice.

    Raises
    ------
    NonPositiveScale
        A scale is not positive.
    NotClosed
        With ``info["witness"] = (a, b)``, the first failing pair.
    """
    scales = tuple(float(s) for s in scales)
    if len(scales) != G.dim:
        raise DimensionMismatch(f"need {G.dim} scales, got {len(scales)}")
    if any(s <= 0 for s in scales):
        raise NonPositiveScale("lattice scales must be positive")
    if check_window < 2:
        raise DimensionMismatch("check_window must be at least 2")
    N = Lattice(G, scales, label or f"{G.label} lattice {scales}")
    pts = _window_points(G.dim, int(check_window)) * N.gamma
    inv_ok = N.contains(G.inverse(pts))
    if not inv_ok.all():
        a = pts[np.argmin(inv_ok)]
        raise NotClosed(f"inverse of {a.tolist()} leaves the lattice", witness=(a, None))
    rows = max(1, 2_000_000 // len(pts))
    for s in range(0, len(pts), rows):
        a = pts[s:s + rows]
        z = G.multiply(a[:, None, :], pts[None, :, :])
        ok = N.contains(z)
        if not ok.all():
            i, j = np.unravel_index(np.argmin(ok), ok.shape)
            wa, wb = a[i], pts[j]
            raise NotClosed(
                f"{wa.tolist()} * {wb.tolist()} = {z[i, j].tolist()} is not a lattice point",
                witness=(wa, wb),
            )
    return N


_DEFAULT_SCALES = {
    "abelian": lambda G: (1.0,) * G.dim,
    "heisenberg": lambda G: (2.0,) * (G.dim - 1) + (1.0,),
    "free_step2": lambda G: (2.0,) * G.rank + (1.0,) * (G.dim - G.rank),
    "engel": lambda G: (12.0, 2.0, 1.0, 1.0),
}


def default_lattice(G: StratifiedGroup, l: int | None = None) -> Lattice:
    """Catalogue lattice of a builtin group.

    ``l`` overrides the first-layer multiplier (2 for Heisenberg and free
    step-two groups, 12 for the first Engel coordinate).
    """
    fam = G.family[0]
    if fam not in _DEFAULT_SCALES:
        raise DimensionMismatch(f"no default lattice for group {G.label!r}; pass scales")
    scales = list(_DEFAULT_SCALES[fam](G))
    if l is not None:
        if fam == "engel":
            scales[0] = float(l)
        else:
            scales[: G.rank] = [float(l)] * G.rank
    return make_lattice(G, scales)


# scanning -------------------------------------------------------------------

def _partial_measure(norm, y, upto):
    """Monotone partial norm functional over coordinates ``< upto``."""
    G = norm.group
    a = np.abs(y[:, :upto])
    if norm.kind == "cygan_koranyi":
        return np.sqrt((a * a).sum(axis=1))
    deg = G.degrees[:upto]
    return np.sqrt((a ** (2.0 / deg)).sum(axis=1))


def _last_bound(norm, y, R):
    """Largest admissible ``|y_last|`` given the other coordinates."""
    G = norm.group
    rest = y[:, :-1]
    v = G.degrees[-1]
    if norm.kind == "cygan_koranyi":
        s = (rest * rest).sum(axis=1)
        return np.sqrt(np.maximum(R ** 4 - s * s, 0.0)) / 4.0, s * s < R ** 4
    deg = G.degrees[:-1]
    r2 = (np.abs(rest) ** (2.0 / deg)).sum(axis=1)
    return np.maximum(R * R - r2, 0.0) ** (v / 2.0), r2 < R * R


def _scan(N: Lattice, norm: QuasiNorm, R, center=None, closed=False, materialize=True,
          budget=POINT_BUDGET):
    """Exact lattice scan of ``{k : ||c^{-1} * (gamma k)|| < R}``.

    Coordinates are enumerated layer by layer: within ``c^{-1} * l`` a
    coordinate of degree ``d`` equals ``l_j`` plus a polynomial in the
    coordinates of lower degree, so its integer range is an explicit interval
    once the lower layers are fixed.  The last (central) coordinate is either
    enumerated or counted in closed form.
    """
    G = norm.group
    n = G.dim
    R = float(R)
    if R <= 0:
        raise NonPositiveScale("radius must be positive")
    gamma = N.gamma
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    cinv = G.inverse(c)
    bounds = norm.box_bound(R)

    def inside(y):
        v = norm.value(y)
        return v <= R if closed else v < R

    frontier = np.zeros((1, n), dtype=np.int64)
    last = n - 1
    for j in range(n if materialize else last):
        y0 = G.multiply(cinv, frontier * gamma)[:, j]
        lo = np.ceil((-bounds[j] - y0) / gamma[j] - 1e-9).astype(np.int64)
        hi = np.floor((bounds[j] - y0) / gamma[j] + 1e-9).astype(np.int64)
        cnt = np.maximum(hi - lo + 1, 0)
        total = int(cnt.sum())
        if total > budget:
            raise RadiusTooLarge(f"scan needs {total} points (budget {budget})", needed=total)
        rep = np.repeat(np.arange(len(frontier)), cnt)
        offs = np.arange(total) - np.repeat(np.cumsum(cnt) - cnt, cnt)
        frontier = frontier[rep]
        frontier[:, j] = lo[rep] + offs
        if j + 1 < n:
            part = _partial_measure(norm, G.multiply(cinv, frontier * gamma), j + 1)
            keep = part <= R if closed else part < R
            frontier = frontier[keep]
    if materialize:
        return frontier[inside(G.multiply(cinv, frontier * gamma))]

    # closed-form count of the central coordinate
    y = G.multiply(cinv, frontier * gamma)
    B, _ = _last_bound(norm, y, R)
    y0 = y[:, last]
    g = gamma[last]
    k_hi = np.floor((B - y0) / g).astype(np.int64)
    k_lo = np.ceil((-B - y0) / g).astype(np.int64)

    def ok(k):
        z = frontier.copy()
        z[:, last] = k
        return inside(G.multiply(cinv, z * gamma))

    # repair rounding at the two ends by direct evaluation
    for _ in range(2):
        k_hi = np.where(ok(k_hi + 1), k_hi + 1, k_hi)
        k_hi = np.where(~ok(k_hi) & (k_hi >= k_lo), k_hi - 1, k_hi)
        k_lo = np.where(ok(k_lo - 1), k_lo - 1, k_lo)
        k_lo = np.where(~ok(k_lo) & (k_lo <= k_hi), k_lo + 1, k_lo)
    return int(np.maximum(k_hi - k_lo + 1, 0).sum())


def enumerate_ball(N: Lattice, norm: QuasiNorm, R, center=None, closed=False,
                   budget=POINT_BUDGET) -> np.ndarray:
    """Lattice points with ``||c^{-1} * x|| < R``, in lexicographic order.

    Parameters
    ----------
    N : Lattice
    norm : QuasiNorm
    R : float
    center : array_like, optional
        Ball center, default the identity.
    closed : bool
        Use ``<=`` instead of ``<``.
    budget : int
        Maximum number of scanned points.

    Returns
    -------
    ndarray, shape (m, n)
        Lattice points (not integer coordinates).
    """
    k = _scan(N, norm, R, center, closed, materialize=True, budget=budget)
    order = np.lexsort(k.T[::-1])
    return k[order] * N.gamma


def count_ball(N: Lattice, norm: QuasiNorm, R, center=None, closed=False,
               budget=POINT_BUDGET) -> int:
    """Number of lattice points in ``B(c, R)`` without materialising them."""
    return _scan(N, norm, R, center, closed, materialize=False, budget=budget)


@dataclass(frozen=True)
class GrowthResult:
    radii: np.ndarray
    counts: np.ndarray
    slope: float


def growth_function(N: Lattice, norm: QuasiNorm, radii, budget=POINT_BUDGET) -> GrowthResult:
    """Counts ``#(N cap B(0, R))`` and the log-log slope over the top half.

    Parameters
    ----------
    radii : sequence of float
        Increasing, at least four values.
    """
    radii = np.asarray(radii, dtype=float)
    if radii.ndim != 1 or len(radii) < 4 or np.any(np.diff(radii) <= 0):
        raise DimensionMismatch("radii must be increasing with at least four values")
    counts = np.array([count_ball(N, norm, R, budget=budget) for R in radii])
    top = slice(len(radii) // 2, None)
    slope = np.polyfit(np.log(radii[top]), np.log(counts[top]), 1)[0]
    return GrowthResult(radii, counts, float(slope))
