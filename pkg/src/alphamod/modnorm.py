"""Block decompositions and discrete decomposition-space norms.

For a partition ``psi_k`` the block operator is ``box_k f = F^-1(psi_k F f)``.
The norm of ``f`` is the weighted ``l^q`` aggregate of ``eps_k = ||box_k f||_p``
with weights ``(1 + ||k||^(2/(1-alpha)))^(s/2)`` on lattice coverings and
``2^(m s)`` on the dyadic covering.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field

import numpy as np

from ._errors import GridMismatch, NotBandLimited, ParamMismatch, UnknownIndex
from .bapu import Bapu
from .covering import AlphaPoly, Dyadic
from .grid import GridFunction, GridSpec, dft, idft

__all__ = [
    "NormParams",
    "NormBreakdown",
    "gaussian_packet",
    "block",
    "alpha_mod_norm",
    "besov_norm",
    "decomposition_norm",
    "pairing",
    "holder_check",
    "spectral_leak",
    "DecayProfile",
    "schwartz_decay_profile",
    "BAND_TOL",
]

BAND_TOL = 1e-6
BATCH = 32


@dataclass(frozen=True)
class NormParams:
    """Integrability ``p, q`` in ``[1, inf]``, smoothness ``s`` and ``alpha`` in ``[0, 1]``."""

    p: float = 2.0
    q: float = 2.0
    s: float = 0.0
    alpha: float = 0.0

    def __post_init__(self):
        for name in ("p", "q"):
            v = getattr(self, name)
            if not 1.0 <= v <= np.inf:
                raise ParamMismatch(f"{name} must lie in [1, inf], got {v}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ParamMismatch(f"alpha must lie in [0, 1], got {self.alpha}")

    @property
    def trivial(self) -> bool:
        """True for ``(p, q, s) = (2, 2, 0)``, where every such space is ``L^2``."""
        return (self.p, self.q, self.s) == (2.0, 2.0, 0.0)

    def dual(self):
        """Parameters ``(p', q', -s)``."""
        def conj(t):
            return np.inf if t == 1 else (1.0 if np.isinf(t) else t / (t - 1.0))
        return NormParams(conj(self.p), conj(self.q), -self.s, self.alpha)


@dataclass(eq=False)
class NormBreakdown:
    """Per-index terms of a decomposition-space norm.

    Attributes
    ----------
    indices : list
        Covering indices of the members used.
    knorms : ndarray
        ``||k||`` (shell number for the dyadic covering).
    weights, eps : ndarray
    total : float
        ``||weights * eps||_q``.
    tail : float
        ``l^q`` norm of ``eps`` over members whose piece center lies
        outside the covering window.
    boundary : ndarray of bool
    """

    params: NormParams
    indices: list
    knorms: np.ndarray
    weights: np.ndarray
    eps: np.ndarray
    total: float
    tail: float
    boundary: np.ndarray
    leak: float = 0.0
    extra: dict = field(default_factory=dict)

    def recompute(self) -> float:
        return _lq(self.weights * self.eps, self.params.q)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["index", "knorm", "weight", "eps"])
        for k, kn, wt, e in zip(self.indices, self.knorms, self.weights, self.eps):
            key = k if np.ndim(k) == 0 else " ".join(str(v) for v in k)
            w.writerow([key, repr(float(kn)), repr(float(wt)), repr(float(e))])
        return buf.getvalue()

    def summary(self) -> dict:
        p = self.params
        return {
            "p": _num(p.p), "q": _num(p.q), "s": p.s, "alpha": p.alpha,
            "trivial_parameters": p.trivial,
            "total": self.total, "tail": self.tail, "members": len(self.indices),
            "spectral_leak": self.leak,
        }

    def to_json(self) -> str:
        return json.dumps(self.summary(), sort_keys=True)


def _num(v):
    return "inf" if np.isinf(v) else float(v)


def _lq(v, q):
    v = np.abs(np.asarray(v, dtype=float))
    if not len(v):
        return 0.0
    if np.isinf(q):
        return float(v.max())
    return float(np.sum(v ** q) ** (1.0 / q))


def gaussian_packet(grid: GridSpec, omega0=None, sigma=1.0, x0=None,
                    domain: str = "space") -> GridFunction:
    """Sampled Gaussian wave packet.

    The spectrum is ``exp(-pi |w - w0|^2 / sigma^2) exp(-2 pi i x0.w)``
    (``sigma`` may be per-axis); the function is its inverse transform, a
    Gaussian of width ``1/sigma`` centred at ``x0`` and modulated by ``w0``.
    With ``domain="frequency"`` the exact spectrum samples are returned,
    which avoids the round-off floor of a forward transform.
    """
    n = grid.n
    w0 = np.zeros(n) if omega0 is None else np.asarray(omega0, dtype=float)
    x0 = np.zeros(n) if x0 is None else np.asarray(x0, dtype=float)
    sig = np.broadcast_to(np.asarray(sigma, dtype=float), (n,))
    w = grid.freq_points()
    F = np.exp(-np.pi * np.sum(((w - w0) / sig) ** 2, axis=1)) * np.exp(-2j * np.pi * (w @ x0))
    out = GridFunction(grid, F, "frequency")
    return out if domain == "frequency" else idft(out)


def _spectrum(f: GridFunction, b: Bapu):
    if f.grid != b.grid:
        raise GridMismatch("function and partition live on different grids")
    return f.values.ravel() if f.domain == "frequency" else dft(f).values.ravel()


def spectral_leak(f: GridFunction, b: Bapu) -> float:
    """Fraction of spectral ``L^2`` mass outside the partition window."""
    F = _spectrum(f, b)
    a = np.abs(F) ** 2
    tot = a.sum()
    return float(a[~b.window_mask].sum() / tot) if tot > 0 else 0.0


def block(f: GridFunction, b: Bapu, index) -> GridFunction:
    """``F^-1(psi_index F f)`` in the space domain."""
    F = _spectrum(f, b)
    pos = b.member_position(index)
    return idft(GridFunction(b.grid, b.values(pos).ravel() * F, "frequency"))


def _member_weights(b: Bapu, params: NormParams):
    cov = b.covering
    kn = cov.index_norms()[b.rows]
    if cov.family == "besov":
        return kn, Dyadic(params.s)(kn)
    if params.alpha >= 1.0:
        raise ParamMismatch("alpha = 1 weights need the dyadic covering")
    return kn, AlphaPoly(params.s, params.alpha)(kn)


def _block_norms(F, b: Bapu, p):
    """``eps_k`` for all members.  ``p = 2`` uses the discrete Plancherel
    identity, other exponents inverse transform each block."""
    g = b.grid
    A = b.psi.tocsr()
    if p == 2:
        sq = A.multiply(A).tocsr() @ (np.abs(F) ** 2)
        return np.sqrt(np.maximum(sq, 0.0) * g.dw)
    out = np.empty(len(b))
    for s in range(0, len(b), BATCH):
        rows = np.asarray(A[s:s + BATCH].todense())
        blk = rows * F[None, :]
        vals = np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(
            blk.reshape((-1,) + g.shape), axes=tuple(range(1, g.n + 1))),
            axes=tuple(range(1, g.n + 1))), axes=tuple(range(1, g.n + 1)))
        a = np.abs(vals.reshape(len(rows), -1)) * (g.size * g.dw)
        if np.isinf(p):
            out[s:s + BATCH] = a.max(axis=1)
        else:
            out[s:s + BATCH] = (np.sum(a ** p, axis=1) * g.dx) ** (1.0 / p)
    return out


def _boundary(b: Bapu):
    cov = b.covering
    if cov.family == "besov":
        return b.rows >= b.record["m_top"]
    return ~cov.interior()[b.rows]


def decomposition_norm(f: GridFunction, b: Bapu, params: NormParams,
                       band_tol: float = BAND_TOL) -> NormBreakdown:
    """Norm of ``f`` for the partition ``b`` (lattice or dyadic family).

    Raises
    ------
    NotBandLimited
        More than ``band_tol`` of the spectral ``L^2`` mass lies outside the
        partition window.
    ParamMismatch
        ``params.alpha`` differs from the covering.
    """
    cov = b.covering
    alpha = 1.0 if cov.family == "besov" else float(cov.params.get("alpha", 0.0))
    if abs(alpha - params.alpha) > 1e-12:
        raise ParamMismatch(f"norm alpha {params.alpha} differs from covering alpha {alpha}")
    F = _spectrum(f, b)
    leak = spectral_leak(GridFunction(b.grid, F, "frequency"), b)
    if leak > band_tol:
        raise NotBandLimited(f"spectral mass fraction {leak:.3g} outside the window", leak=leak)
    kn, w = _member_weights(b, params)
    eps = _block_norms(F, b, params.p)
    bd = _boundary(b)
    return NormBreakdown(params, [b.index_of(i) for i in range(len(b))], kn, w, eps,
                         _lq(w * eps, params.q), _lq(eps[bd], params.q), bd, leak)


def alpha_mod_norm(f: GridFunction, b: Bapu, params: NormParams, band_tol=BAND_TOL):
    """Alpha-modulation norm with weights ``(1 + ||k||^(2/(1-alpha)))^(s/2)``."""
    if b.family == "besov":
        raise ParamMismatch("use besov_norm for the dyadic partition")
    return decomposition_norm(f, b, params, band_tol)


def besov_norm(f: GridFunction, b: Bapu, params: NormParams, band_tol=BAND_TOL):
    """Besov norm with weights ``2^(m s)``."""
    if b.family != "besov":
        raise ParamMismatch("besov_norm needs the dyadic partition")
    return decomposition_norm(f, b, params, band_tol)


def _reflect(F, grid: GridSpec):
    """Samples at ``-w`` with indices taken modulo ``M`` on each axis."""
    V = F.reshape(grid.shape)
    for ax in range(grid.n):
        V = np.roll(np.flip(V, axis=ax), 1, axis=ax)
    return V.ravel()


def pairing(f: GridFunction, g: GridFunction, b: Bapu) -> complex:
    """``sum_k h^n sum_x box_k f(x) box_k g(x)`` (bilinear, no conjugation).

    Evaluated in frequency as ``sum_k sum_w psi_k(w) F(w) psi_k(-w) G(-w) / L^n``,
    which is the same discrete sum by the DFT convolution identity.
    """
    F = _spectrum(f, b)
    Gr = _reflect(_spectrum(g, b), b.grid)
    A = b.psi.tocsr()
    Ar = A[:, _reflect(np.arange(b.grid.size), b.grid)]
    s = np.asarray(A.multiply(Ar).sum(axis=0)).ravel()
    return complex(np.sum(s * F * Gr) * b.grid.dw)


def holder_check(f: GridFunction, g: GridFunction, b: Bapu, params: NormParams,
                 rtol: float = 1e-6):
    """``|<f, g>| <= ||f||_{-s, p', q'} ||g||_{s, p, q} (1 + rtol)``.

    Returns
    -------
    ok : bool
    lhs, rhs : float
    """
    if not (1 < params.p < np.inf and 1 < params.q < np.inf):
        raise ParamMismatch("the pairing check needs 1 < p, q < inf")
    lhs = abs(pairing(f, g, b))
    nf = decomposition_norm(f, b, params.dual()).total
    ng = decomposition_norm(g, b, params).total
    rhs = nf * ng
    return bool(lhs <= rhs * (1.0 + rtol)), lhs, rhs


@dataclass(eq=False)
class DecayProfile:
    """``eps_k`` against ``||k||`` with unit-bin maxima of ``eps_k (1 + ||k||)^power``.

    ``passes`` is True when the binned maxima are nonincreasing for bins at
    or beyond the first quartile of ``||k||`` among window members.
    """

    knorms: np.ndarray
    eps: np.ndarray
    bin_edges: np.ndarray
    bin_max: np.ndarray
    quartile: float
    power: float
    passes: bool
    first_violation: float | None = None

    def table(self):
        order = np.lexsort((self.eps, self.knorms))
        return np.column_stack([self.knorms[order], self.eps[order]])


def schwartz_decay_profile(f: GridFunction, b: Bapu, params: NormParams | None = None,
                           power: float = 10.0, rtol: float = 1e-9) -> DecayProfile:
    """Measure superpolynomial decay of block norms of a Schwartz function.

    Only members whose piece center lies in the covering window are used.
    Indices are grouped into unit bins of ``||k||``; within a bin the largest
    ``eps_k (1 + ||k||)^power`` is kept, since a fixed norm shell holds many
    lattice directions with different decay.
    """
    if params is None:
        alpha = 1.0 if b.family == "besov" else float(b.covering.params.get("alpha", 0.0))
        params = NormParams(2.0, 2.0, 0.0, alpha)
    nb = decomposition_norm(f, b, params, band_tol=np.inf)
    inner = ~nb.boundary
    kn, eps = nb.knorms[inner], nb.eps[inner]
    if not len(kn):
        raise UnknownIndex("no members inside the window")
    q1 = float(np.quantile(kn, 0.25))
    val = eps * (1.0 + kn) ** power
    bins = np.floor(kn).astype(int)
    ub = np.unique(bins)
    bmax = np.array([val[bins == u].max() for u in ub])
    sel = ub >= np.floor(q1)
    tail = bmax[sel]
    viol = np.flatnonzero(tail[1:] > tail[:-1] * (1.0 + rtol) + 1e-300)
    first = float(ub[sel][viol[0] + 1]) if len(viol) else None
    return DecayProfile(kn, eps, ub.astype(float), bmax, q1, power, not len(viol), first)
