"""Homogeneous quasi-norms and empirical estimates of their constants."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize

from ._errors import GroupMismatch, UnknownName, WrongGroup
from .groups import StratifiedGroup

__all__ = [
    "QuasiNorm",
    "QuasiConstantEstimate",
    "estimate_quasi_constant",
    "estimate_equivalence",
    "sample_unit_sphere",
    "chunked_rngs",
]

NORM_KINDS = ("homogeneous2", "cygan_koranyi", "euclidean")
CHUNK = 8192
SAFETY_FACTOR = 1.25


def chunked_rngs(seed, n_items, chunk=CHUNK):
    """Yield ``(start, stop, rng)`` with one RNG substream per chunk.

    Results depend only on ``seed`` and the chunk index, so any parallel
    split over chunks reproduces the serial output.
    """
    n_chunks = max(1, -(-int(n_items) // chunk))
    children = np.random.SeedSequence(int(seed)).spawn(n_chunks)
    for c, ss in enumerate(children):
        start = c * chunk
        yield start, min(start + chunk, n_items), np.random.default_rng(ss)


def _heisenberg_n(G):
    """Return n if ``G`` has the Heisenberg bracket table up to sign, else None."""
    if G.step != 2 or G.layer_dims[1] != 1 or G.layer_dims[0] % 2 or G.law != "bch":
        return None
    n = G.layer_dims[0] // 2
    pairs = {(i, j): c for i, j, k, c in G.brackets}
    if len(pairs) != n:
        return None
    signs = {pairs.get((i, n + i)) for i in range(n)}
    if len(signs) == 1 and signs <= {1, -1}:
        return n
    return None


@dataclass(frozen=True)
class QuasiNorm:
    """A homogeneous quasi-norm on a stratified group.

    Parameters
    ----------
    group : StratifiedGroup
    kind : {"homogeneous2", "cygan_koranyi", "euclidean"}
        ``homogeneous2`` is ``(sum_j |x_j|^(2/v_j))^(1/2)``, available on every
        group.  ``cygan_koranyi`` is ``((|x|^2+|w|^2)^2 + 16 t^2)^(1/4)`` on
        Heisenberg groups.  ``euclidean`` is the Euclidean norm on abelian
        groups.
    """

    group: StratifiedGroup
    kind: str = "homogeneous2"

    def __post_init__(self):
        if self.kind not in NORM_KINDS:
            raise UnknownName(f"unknown norm kind {self.kind!r}; choose from {NORM_KINDS}")
        if self.kind == "cygan_koranyi" and _heisenberg_n(self.group) is None:
            raise WrongGroup("the Cygan-Koranyi norm is only defined on Heisenberg groups")
        if self.kind == "euclidean" and self.group.step != 1:
            raise WrongGroup("the Euclidean norm is only homogeneous on abelian groups")

    @property
    def is_subadditive(self) -> bool:
        """True when the triangle inequality holds with constant one."""
        return self.kind in ("euclidean", "cygan_koranyi") or self.group.step == 1

    def __call__(self, x):
        return self.value(x)

    def value(self, x):
        """Evaluate the norm on (batched) coordinates."""
        x = self.group._check(x)
        if self.kind == "homogeneous2" and self.group.step == 1 or self.kind == "euclidean":
            return np.sqrt(np.einsum("...i,...i->...", x, x))
        if self.kind == "cygan_koranyi":
            h = x[..., :-1]
            t = x[..., -1]
            s = np.einsum("...i,...i->...", h, h)
            return (s * s + 16.0 * t * t) ** 0.25
        a = np.abs(x)
        terms = np.where(self.group.degrees == 1, a * a, a ** (2.0 / self.group.degrees))
        return np.sqrt(terms.sum(axis=-1))

    def distance(self, x, y):
        """Left-invariant distance ``|| x^{-1} * y ||``."""
        G = self.group
        return self.value(G.multiply(G.inverse(x), y))

    def box_bound(self, R):
        """Per-coordinate bounds ``b_j`` with ``||x|| < R => |x_j| <= b_j``."""
        deg = self.group.degrees
        if self.kind == "cygan_koranyi":
            b = np.full(deg.shape, float(R))
            b[-1] = R * R / 4.0
            return b
        return np.power(float(R), deg).astype(float)

    def sample_ball(self, rng, k, R=1.0):
        """``k`` uniform samples from the open ball ``B(0, R)`` by rejection."""
        out = np.empty((0, self.group.dim))
        b = self.box_bound(1.0)
        while len(out) < k:
            u = rng.uniform(-1.0, 1.0, size=(2 * k + 16, self.group.dim)) * b
            out = np.concatenate([out, u[self.value(u) < 1.0]])
        return self.group.dilate(R, out[:k])


def sample_unit_sphere(norm: QuasiNorm, rng, k):
    """Sample ``k`` points with norm one by normalising box draws."""
    G = norm.group
    u = rng.uniform(-1.0, 1.0, size=(k, G.dim))
    v = norm.value(u)
    v = np.where(v == 0, 1.0, v)
    return G.dilate(1.0 / v, u)


@dataclass(frozen=True)
class QuasiConstantEstimate:
    """Empirical lower bound for the quasi-triangle constant.

    Attributes
    ----------
    c_est : float
        Largest observed ``||x*y|| / (||x|| + ||y||)``.
    samples, seed : int
    max_witness : tuple of ndarray
        Pair attaining ``c_est``.
    """

    c_est: float
    samples: int
    seed: int
    max_witness: tuple = field(repr=False)

    @property
    def c_safe(self) -> float:
        return SAFETY_FACTOR * self.c_est


def _ratio(norm, x, y):
    G = norm.group
    den = norm.value(x) + norm.value(y)
    return norm.value(G.multiply(x, y)) / np.where(den == 0, 1.0, den)


def estimate_quasi_constant(norm: QuasiNorm, samples=20000, radius=1.0, seed=0,
                            refine=8) -> QuasiConstantEstimate:
    """Estimate ``C`` in ``||x*y|| <= C(||x|| + ||y||)``.

    Pairs are drawn as ``x = D_R(u)``, ``y = D_{R t}(v)`` with ``u, v`` on the
    unit sphere and ``t`` log-uniform on ``[1e-2, 1e2]``.  The best pairs are
    then refined by Nelder-Mead.  The pair ``(x, 0)`` always gives ratio one,
    so ``c_est >= 1``.

    Parameters
    ----------
    norm : QuasiNorm
    samples : int
        Number of random pairs (at least 1000).
    radius : float
        Overall scale; by homogeneity the estimate does not depend on it.
    seed : int
    refine : int
        Number of top pairs handed to the local optimiser.

    Returns
    -------
    QuasiConstantEstimate
    """
    G = norm.group
    samples = max(int(samples), 1000)
    best = [(1.0, 0, None)]
    for start, stop, rng in chunked_rngs(seed, samples):
        k = stop - start
        u = sample_unit_sphere(norm, rng, k)
        v = sample_unit_sphere(norm, rng, k)
        t = np.exp(rng.uniform(np.log(1e-2), np.log(1e2), size=k))
        x = G.dilate(radius, u)
        y = G.dilate(radius * t, v)
        r = _ratio(norm, x, y)
        top = np.argsort(-r, kind="stable")[:refine]
        best.extend((float(r[i]), start + int(i), (x[i], y[i])) for i in top)
    best.sort(key=lambda b: (-b[0], b[1]))
    e0 = np.zeros(G.dim)
    e0[0] = radius
    c_est, witness = 1.0, (e0, np.zeros(G.dim))
    n = G.dim

    def neg(vec):
        return -float(_ratio(norm, vec[:n], vec[n:]))

    for val, _, pair in best[:refine]:
        if pair is None:
            continue
        if val > c_est:
            c_est, witness = val, pair
        res = minimize(neg, np.concatenate(pair), method="Nelder-Mead",
                       options=dict(maxfev=2000 * n, xatol=1e-12, fatol=1e-15))
        xr, yr = res.x[:n], res.x[n:]
        if norm.value(xr) > 0 and norm.value(yr) > 0:
            # rescale so that ||x|| = radius
            s = radius / norm.value(xr)
            xr, yr = G.dilate(s, xr), G.dilate(s, yr)
            val = float(_ratio(norm, xr, yr))
            if val > c_est:
                c_est, witness = val, (xr, yr)
    c_est = float(_ratio(norm, witness[0], witness[1]))
    return QuasiConstantEstimate(max(c_est, 1.0), samples, int(seed), witness)


def estimate_equivalence(norm_a: QuasiNorm, norm_b: QuasiNorm, samples=20000, seed=0,
                         refine=8):
    """Bounds ``(c_lo, c_hi)`` with ``c_lo ||x||_a <= ||x||_b <= c_hi ||x||_a``.

    Sampled min and max of ``||x||_b`` on the ``a``-unit sphere, followed by
    local refinement of the extreme samples.
    """
    if norm_a.group != norm_b.group:
        raise WrongGroup("norms live on different groups")
    if norm_a.kind == norm_b.kind:
        return 1.0, 1.0
    G = norm_a.group

    def ratio(x):
        x = np.asarray(x, dtype=float)
        return norm_b.value(x) / norm_a.value(x)

    vals, pts = [], []
    for start, stop, rng in chunked_rngs(seed, max(int(samples), 1000)):
        u = sample_unit_sphere(norm_a, rng, stop - start)
        r = ratio(u)
        vals.append(r)
        pts.append(u)
    vals = np.concatenate(vals)
    pts = np.concatenate(pts)
    order = np.argsort(vals, kind="stable")
    lo, hi = float(vals[order[0]]), float(vals[order[-1]])
    for sign, idx in ((1.0, order[:refine]), (-1.0, order[::-1][:refine])):
        for i in idx:
            res = minimize(lambda v: sign * ratio(v) if norm_a.value(v) > 0 else np.inf,
                           pts[i], method="Nelder-Mead",
                           options=dict(maxfev=1000 * G.dim, xatol=1e-12, fatol=1e-15))
            if np.isfinite(res.fun):
                val = float(ratio(res.x))
                lo, hi = min(lo, val), max(hi, val)
    return lo, hi


def check_same_group(*objs):
    """Raise :class:`GroupMismatch` unless all objects share one group."""
    groups = [o.group for o in objs]
    if any(g != groups[0] for g in groups[1:]):
        raise GroupMismatch("objects live on different groups")
