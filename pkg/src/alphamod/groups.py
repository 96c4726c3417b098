"""Stratified Lie groups in exponential coordinates.

A group is given by its layer dimensions and a sparse table of rational
structure constants ``c_ij^k`` with ``[X_i, X_j] = sum_k c_ij^k X_k``.
Coordinates are indexed from 0 and ordered layer by layer.  The product is
the Baker-Campbell-Hausdorff series truncated after the degree three terms,
which is exact for groups of step at most three.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from itertools import product as _iproduct

import numpy as np

from ._errors import (
    DimensionMismatch,
    GradingViolation,
    JacobiViolation,
    NonPositiveScale,
    StepUnsupported,
    UnknownName,
)

__all__ = [
    "StratifiedGroup",
    "build_group",
    "builtin",
    "BUILTIN_NAMES",
    "group_from_json",
    "axiom_residuals",
    "heisenberg_printed_law",
]

MAX_STEP = 3


def _as_fraction(c):
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (tuple, list)) and len(c) == 2:
        return Fraction(int(c[0]), int(c[1]))
    if isinstance(c, float):
        return Fraction(c).limit_denominator(10**9)
    return Fraction(c)


class StratifiedGroup:
    """A stratified group with a polynomial group law.

    Instances are immutable after construction; use :func:`build_group` or
    :func:`builtin` rather than calling the constructor directly.

    Attributes
    ----------
    layer_dims : tuple of int
        Dimensions ``(n_1, ..., n_s)`` of the layers.
    degrees : ndarray of int, shape (n,)
        Degree ``v_j`` of each coordinate.
    brackets : tuple of (int, int, int, Fraction)
        Canonical structure constants with ``i < j``.
    label : str
        Human readable name.
    law : str
        ``"bch"`` or the name of a raw polynomial law.
    """

    def __init__(self, layer_dims, brackets, label="", law="bch", family=None):
        self.layer_dims = tuple(int(d) for d in layer_dims)
        self.degrees = np.repeat(np.arange(1, len(self.layer_dims) + 1), self.layer_dims)
        self.degrees.setflags(write=False)
        self.brackets = tuple(brackets)
        self.label = label
        self.law = law
        self.family = family if family is not None else ("custom", None)
        n = self.dim
        C = np.zeros((n, n, n))
        for i, j, k, c in self.brackets:
            C[i, j, k] = float(c)
            C[j, i, k] = -float(c)
        C.setflags(write=False)
        self._C = C
        # sparse form: [x, y]_k = sum_b c_b (x_i y_j - x_j y_i) over brackets b
        self._bi = np.array([b[0] for b in self.brackets], dtype=np.intp)
        self._bj = np.array([b[1] for b in self.brackets], dtype=np.intp)
        M = np.zeros((len(self.brackets), n))
        for r, (i, j, k, c) in enumerate(self.brackets):
            M[r, k] = float(c)
        self._bM = M

    # structural data -------------------------------------------------
    @property
    def dim(self) -> int:
        return int(sum(self.layer_dims))

    @property
    def step(self) -> int:
        return len(self.layer_dims)

    @property
    def rank(self) -> int:
        return self.layer_dims[0]

    @property
    def homogeneous_dim(self) -> int:
        return int(sum((i + 1) * d for i, d in enumerate(self.layer_dims)))

    Q = homogeneous_dim

    @property
    def structure_tensor(self) -> np.ndarray:
        """Dense float array ``C[i, j, k] = c_ij^k`` (antisymmetric in i, j)."""
        return self._C

    def layer_slices(self):
        """Coordinate slices of the layers, in order."""
        out, start = [], 0
        for d in self.layer_dims:
            out.append(slice(start, start + d))
            start += d
        return out

    def __repr__(self):
        return f"StratifiedGroup({self.label!r}, layers={list(self.layer_dims)}, law={self.law!r})"

    def __eq__(self, other):
        if not isinstance(other, StratifiedGroup):
            return NotImplemented
        return (
            self.layer_dims == other.layer_dims
            and self.brackets == other.brackets
            and self.law == other.law
        )

    def __hash__(self):
        return hash((self.layer_dims, self.brackets, self.law))

    # arithmetic ------------------------------------------------------
    def _check(self, x):
        x = np.asarray(x, dtype=float)
        if x.shape[-1:] != (self.dim,):
            raise DimensionMismatch(
                f"expected trailing dimension {self.dim}, got shape {x.shape}"
            )
        return x

    def bracket(self, x, y):
        """Lie bracket ``[x, y]`` of (batched) coordinate vectors."""
        x = self._check(x)
        y = self._check(y)
        if not len(self._bi):
            return np.zeros(np.broadcast_shapes(x.shape, y.shape))
        i, j = self._bi, self._bj
        p = x[..., i] * y[..., j] - x[..., j] * y[..., i]
        return p @ self._bM

    def multiply(self, x, y):
        """Group product ``x * y``; broadcasts over leading axes."""
        x = self._check(x)
        y = self._check(y)
        if self.law != "bch":
            return _RAW_LAWS[self.law](x, y)
        if self.step == 1:
            return x + y
        xy = self.bracket(x, y)
        z = x + y + 0.5 * xy
        if self.step >= 3:
            z = z + (self.bracket(x, xy) - self.bracket(y, xy)) / 12.0
        return z

    def inverse(self, x):
        """Group inverse, which is coordinate negation."""
        return -self._check(x)

    def dilate(self, r, x):
        """Apply the dilation ``D_r``; ``r`` may be an array broadcasting
        against the leading axes of ``x``."""
        r = np.asarray(r, dtype=float)
        if np.any(r <= 0):
            raise NonPositiveScale("dilation factor must be positive")
        x = self._check(x)
        return x * np.power(r[..., None], self.degrees)

    def identity(self):
        return np.zeros(self.dim)

    def ad_matrix(self, c):
        """Matrix of ``y -> [c, y]``."""
        c = self._check(c)
        return np.einsum("i,ijk->kj", c, self._C)

    # serialization ---------------------------------------------------
    def to_dict(self) -> dict:
        d = {
            "layers": list(self.layer_dims),
            "brackets": [[i, j, k, c.numerator, c.denominator] for i, j, k, c in self.brackets],
            "label": self.label,
        }
        if self.law != "bch":
            d["law"] = self.law
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


# raw printed laws kept for comparison experiments
def _engel_paper_law(x, y):
    x1, x2, x3, x4 = np.moveaxis(x, -1, 0)
    y1, y2, y3, y4 = np.moveaxis(y, -1, 0)
    z3 = x3 + y3 + 0.5 * (x1 * y2 - x2 * y1)
    z4 = x4 + y4 + 0.5 * (x1 * y3 - x3 * y1) + (x1 / 12.0) * (x1 * y2 - x2 * y1)
    return np.stack(np.broadcast_arrays(x1 + y1, x2 + y2, z3, z4), axis=-1)


_RAW_LAWS = {"engel_paper": _engel_paper_law}


def _canonical_brackets(layers, brackets):
    n = int(sum(layers))
    table = {}
    items = brackets.items() if isinstance(brackets, dict) else brackets
    for item in items:
        if isinstance(brackets, dict):
            (i, j, k), c = item
        elif len(item) == 5:
            i, j, k, num, den = item
            c = Fraction(int(num), int(den))
        else:
            i, j, k, c = item
        i, j, k = int(i), int(j), int(k)
        c = _as_fraction(c)
        if not all(0 <= t < n for t in (i, j, k)):
            raise DimensionMismatch(f"bracket index ({i},{j},{k}) outside 0..{n - 1}")
        if i == j:
            if c != 0:
                raise GradingViolation(f"[X_{i}, X_{i}] must vanish")
            continue
        if i > j:
            i, j, c = j, i, -c
        key = (i, j, k)
        if key in table and table[key] != c:
            raise GradingViolation(f"inconsistent entries for c_{i}{j}^{k} (antisymmetry)")
        table[key] = c
    return tuple(sorted((i, j, k, c) for (i, j, k), c in table.items() if c != 0))


def _sparse_bracket(table, a, b):
    # bracket of two sparse Fraction vectors {index: coef}
    out = {}
    for i, ai in a.items():
        for j, bj in b.items():
            for k, c in table.get((i, j), ()):
                out[k] = out.get(k, 0) + ai * bj * c
    return {k: v for k, v in out.items() if v != 0}


def build_group(layers, brackets=(), label="", law="bch", family=None) -> StratifiedGroup:
    """Validate and assemble a stratified group.

    Parameters
    ----------
    layers : sequence of int
        Positive layer dimensions.
    brackets : iterable or dict
        Entries ``(i, j, k, c)`` or ``(i, j, k, num, den)`` meaning
        ``c_ij^k = c``, or a dict ``{(i, j, k): c}``.  Only one of each
        antisymmetric pair needs to be given.
    label : str, optional
    law : {"bch", "engel_paper"}, optional
        Group law.  Raw laws bypass the BCH product.

    Returns
    -------
    StratifiedGroup

    Raises
    ------
    DimensionMismatch
        Empty or non-positive layers, or indices out of range.
    GradingViolation
        A bracket lands in the wrong layer, or the first layer does not
        generate the algebra.
    JacobiViolation
        The Jacobi identity fails on some basis triple.
    StepUnsupported
        More than three layers.
    """
    layers = [int(d) for d in layers]
    if not layers or any(d <= 0 for d in layers):
        raise DimensionMismatch("layers must be a nonempty list of positive integers")
    if len(layers) > MAX_STEP:
        raise StepUnsupported(f"step {len(layers)} exceeds the supported maximum {MAX_STEP}")
    if law != "bch" and law not in _RAW_LAWS:
        raise UnknownName(f"unknown group law {law!r}")
    canon = _canonical_brackets(layers, brackets)
    deg = np.repeat(np.arange(1, len(layers) + 1), layers)
    n = len(deg)
    for i, j, k, c in canon:
        if deg[k] != deg[i] + deg[j]:
            raise GradingViolation(
                f"c_{i}{j}^{k} maps degrees {deg[i]}+{deg[j]} into degree {deg[k]}"
            )

    table = {}
    for i, j, k, c in canon:
        table.setdefault((i, j), []).append((k, c))
        table.setdefault((j, i), []).append((k, -c))

    # Jacobi identity over all basis triples, in exact arithmetic
    for a, b, e in _iproduct(range(n), repeat=3):
        if not (a < b < e):
            continue
        ea, eb, ee = {a: Fraction(1)}, {b: Fraction(1)}, {e: Fraction(1)}
        res = {}
        for u, v, w in ((ea, eb, ee), (eb, ee, ea), (ee, ea, eb)):
            for k, val in _sparse_bracket(table, _sparse_bracket(table, u, v), w).items():
                res[k] = res.get(k, 0) + val
        bad = {k: v for k, v in res.items() if abs(v) > 1e-12}
        if bad:
            raise JacobiViolation(f"Jacobi residual {bad} on basis triple ({a},{b},{e})")

    # stratification: [V_1, V_j] must span V_{j+1}
    C = np.zeros((n, n, n))
    for i, j, k, c in canon:
        C[i, j, k], C[j, i, k] = float(c), -float(c)
    starts = np.cumsum([0] + layers)
    for s in range(len(layers) - 1):
        first = range(starts[0], starts[1])
        cur = range(starts[s], starts[s + 1])
        nxt = slice(starts[s + 1], starts[s + 2])
        images = np.array([C[i, j, nxt] for i in first for j in cur])
        if np.linalg.matrix_rank(images) < layers[s + 1]:
            raise GradingViolation(f"layer {s + 2} is not generated by brackets with layer 1")

    return StratifiedGroup(layers, canon, label=label, law=law, family=family)


def group_from_json(text) -> StratifiedGroup:
    """Parse a group definition (JSON text or already-decoded dict)."""
    d = json.loads(text) if isinstance(text, (str, bytes)) else dict(text)
    try:
        layers = d["layers"]
        brackets = d.get("brackets", [])
    except (KeyError, TypeError) as exc:
        raise DimensionMismatch(f"group definition lacks field {exc}") from None
    for b in brackets:
        if len(b) != 5:
            raise DimensionMismatch(f"bracket entry {b!r} must be [i, j, k, num, den]")
    return build_group(layers, brackets, label=d.get("label", ""), law=d.get("law", "bch"))


# builtin catalogue ---------------------------------------------------------

def abelian(n: int) -> StratifiedGroup:
    return build_group([n], (), label=f"abelian({n})", family=("abelian", n))


def heisenberg(n: int) -> StratifiedGroup:
    """Heisenberg group with coordinates ``(x_1..x_n, w_1..w_n, t)``.

    The bracket sign is chosen so that the product reads
    ``t + t' + (x'w - xw')/2``.
    """
    br = [(i, n + i, 2 * n, -1) for i in range(n)]
    return build_group([2 * n, 1], br, label=f"heisenberg({n})", family=("heisenberg", n))


def engel_bch() -> StratifiedGroup:
    br = [(0, 1, 2, 1), (0, 2, 3, 1)]
    return build_group([2, 1, 1], br, label="engel_bch", family=("engel", None))


def engel_paper_law() -> StratifiedGroup:
    br = [(0, 1, 2, 1), (0, 2, 3, 1)]
    return build_group([2, 1, 1], br, label="engel_paper_law", law="engel_paper",
                       family=("engel", None))


def free_step2(k: int) -> StratifiedGroup:
    """Free step-two nilpotent group of rank ``k``; ``[X_i, X_j] = Z_ij``."""
    pairs = [(i, j) for i in range(k) for j in range(i + 1, k)]
    br = [(i, j, k + p, 1) for p, (i, j) in enumerate(pairs)]
    return build_group([k, len(pairs)], br, label=f"free_step2({k})", family=("free_step2", k))


_BUILTINS = {
    "abelian": (abelian, True),
    "heisenberg": (heisenberg, True),
    "free_step2": (free_step2, True),
    "engel_bch": (engel_bch, False),
    "engel_paper_law": (engel_paper_law, False),
}
BUILTIN_NAMES = ("abelian(n)", "heisenberg(n)", "engel_bch", "engel_paper_law", "free_step2(k)")


def builtin(name: str) -> StratifiedGroup:
    """Return a catalogue group.

    Accepted spellings include ``"heisenberg(1)"``, ``"heisenberg1"`` and
    ``"heisenberg_1"``.
    """
    key = str(name).strip().lower()
    m = re.fullmatch(r"(abelian|heisenberg|free_step2)_?\(?(\d+)\)?", key)
    if m:
        base, arg = m.group(1), m.group(2)
    elif key in _BUILTINS:
        base, arg = key, None
    else:
        raise UnknownName(f"unknown builtin group {name!r}; known: {', '.join(BUILTIN_NAMES)}")
    fn, needs_arg = _BUILTINS[base]
    if needs_arg:
        if arg is None or int(arg) < 1:
            raise UnknownName(f"builtin {base!r} needs a positive integer argument")
        return fn(int(arg))
    if arg is not None:
        raise UnknownName(f"builtin {base!r} takes no argument")
    return fn()


# axiom checks ----------------------------------------------------------------

def heisenberg_printed_law(x, y):
    """Reference product ``(x+x', w+w', t+t'+(x'w - xw')/2)`` on ``(x, w, t)``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    n = (x.shape[-1] - 1) // 2
    a, w, t = x[..., :n], x[..., n:2 * n], x[..., -1]
    b, v, s = y[..., :n], y[..., n:2 * n], y[..., -1]
    z = t + s + 0.5 * (np.sum(b * w, axis=-1) - np.sum(a * v, axis=-1))
    return np.concatenate([a + b, w + v, z[..., None]], axis=-1)


def axiom_residuals(G: StratifiedGroup, samples: int = 1000, seed: int = 0, scale: float = 1.0):
    """Residuals of the group axioms on random triples.

    Returns
    -------
    dict
        ``associativity`` is ``max |(xy)z - x(yz)|_inf / (1 + m)^3`` with
        ``m`` the largest coordinate magnitude of the triple.  ``identity``,
        ``inverse`` and ``dilation`` (automorphism, relative) are absolute
        or relative maxima; ``affine`` is the second finite difference of
        ``y -> x*y`` (step two only, else ``None``); ``unimodular`` is
        ``max ||det J| - 1|`` of the left translation Jacobian.
    """
    rng = np.random.default_rng(seed)
    n = G.dim
    x, y, z = (rng.uniform(-scale, scale, size=(samples, n)) for _ in range(3))
    m = np.max(np.abs(np.stack([x, y, z])), axis=(0, 2))
    lhs = G.multiply(G.multiply(x, y), z)
    rhs = G.multiply(x, G.multiply(y, z))
    assoc = float(np.max(np.max(np.abs(lhs - rhs), axis=1) / (1.0 + m) ** 3))
    e = np.zeros(n)
    ident = float(max(np.abs(G.multiply(x, e) - x).max(), np.abs(G.multiply(e, x) - x).max()))
    inv = float(max(np.abs(G.multiply(x, G.inverse(x))).max(),
                    np.abs(G.multiply(G.inverse(x), x)).max()))
    r = np.exp(rng.uniform(np.log(0.2), np.log(5.0), size=samples))
    a = G.dilate(r, G.multiply(x, y))
    b = G.multiply(G.dilate(r, x), G.dilate(r, y))
    dil = float(np.max(np.abs(a - b) / (1.0 + np.abs(a))))
    affine = None
    if G.step <= 2 and G.law == "bch":
        h = rng.uniform(-scale, scale, size=(samples, n))
        d2 = G.multiply(x, y + h) - 2.0 * G.multiply(x, y) + G.multiply(x, y - h)
        affine = float(np.abs(d2).max())
    eps = 1e-4
    E = np.eye(n) * eps
    k = min(samples, 100)
    J = (G.multiply(x[:k, None, :], y[:k, None, :] + E) - G.multiply(x[:k, None, :], y[:k, None, :] - E)) / (2 * eps)
    unimod = float(np.abs(np.abs(np.linalg.det(J)) - 1.0).max())
    return {"associativity": assoc, "identity": ident, "inverse": inv, "dilation": dil,
            "affine": affine, "unimodular": unimod, "samples": int(samples), "seed": int(seed)}
