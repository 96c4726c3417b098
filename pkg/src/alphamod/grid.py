"""Uniform sampling grids and the discrete Fourier transform.

A grid samples ``[-L/2, L/2)`` with ``M`` points per axis, ``x_i = (i - M/2) h``
with ``h = L/M``.  Frequencies are ``w_j = (j - M/2)/L``.  The forward
transform approximates ``F f(w) = int f(x) exp(-2 pi i x.w) dx`` by a
Riemann sum, so that ``sum |f|^2 h^n = sum |F f|^2 L^-n`` exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._errors import BudgetExceeded, DimensionMismatch, DomainTagMismatch, GridMismatch

__all__ = ["GridSpec", "GridFunction", "dft", "idft", "lp_norm", "GRID_BUDGET"]

GRID_BUDGET = 1 << 22


@dataclass(frozen=True)
class GridSpec:
    """Per-axis side lengths ``L`` and point counts ``M`` (powers of two, >= 8).

    Scalars are broadcast with :meth:`make`.
    """

    L: tuple
    M: tuple

    def __post_init__(self):
        if len(self.L) != len(self.M) or not self.L:
            raise DimensionMismatch("L and M need one entry per axis")
        for m in self.M:
            if m < 8 or m & (m - 1):
                raise DimensionMismatch(f"points per axis must be a power of two >= 8, got {m}")
        if any(l <= 0 for l in self.L):
            raise DimensionMismatch("side lengths must be positive")
        if int(np.prod(self.M)) > GRID_BUDGET:
            raise BudgetExceeded(f"grid has {int(np.prod(self.M))} points (budget {GRID_BUDGET})")

    @classmethod
    def make(cls, n, L, M):
        L = np.broadcast_to(np.asarray(L, dtype=float), (n,))
        M = np.broadcast_to(np.asarray(M, dtype=int), (n,))
        return cls(tuple(float(v) for v in L), tuple(int(v) for v in M))

    @property
    def n(self) -> int:
        return len(self.M)

    @property
    def shape(self):
        return tuple(self.M)

    @property
    def size(self) -> int:
        return int(np.prod(self.M))

    @property
    def h(self) -> np.ndarray:
        return np.asarray(self.L) / np.asarray(self.M)

    @property
    def dx(self) -> float:
        """Space cell volume ``prod h``."""
        return float(np.prod(self.h))

    @property
    def dw(self) -> float:
        """Frequency cell volume ``prod 1/L``."""
        return float(np.prod(1.0 / np.asarray(self.L)))

    @property
    def freq_extent(self) -> np.ndarray:
        """Half-width ``M/(2L)`` of the frequency box per axis."""
        return np.asarray(self.M) / (2.0 * np.asarray(self.L))

    def space_axes(self):
        return [(np.arange(m) - m // 2) * (l / m) for l, m in zip(self.L, self.M)]

    def freq_axes(self):
        return [(np.arange(m) - m // 2) / l for l, m in zip(self.L, self.M)]

    def _points(self, axes):
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([a.ravel() for a in mesh], axis=-1)

    def space_points(self):
        """All sample points, shape ``(size, n)`` in C order."""
        return self._points(self.space_axes())

    def freq_points(self):
        return self._points(self.freq_axes())

    def to_dict(self):
        return {"L": list(self.L), "M": list(self.M)}


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Samples on a grid, tagged ``"space"`` or ``"frequency"``."""

    grid: GridSpec
    values: np.ndarray
    domain: str = "space"

    def __post_init__(self):
        if self.domain not in ("space", "frequency"):
            raise DomainTagMismatch(f"unknown domain {self.domain!r}")
        v = np.asarray(self.values, dtype=complex).reshape(self.grid.shape)
        if not np.all(np.isfinite(v)):
            raise DimensionMismatch("grid values must be finite")
        object.__setattr__(self, "values", v)

    def _check(self, other):
        if other.grid != self.grid:
            raise GridMismatch("functions live on different grids")
        if other.domain != self.domain:
            raise DomainTagMismatch("functions live in different domains")

    def __add__(self, other):
        self._check(other)
        return GridFunction(self.grid, self.values + other.values, self.domain)

    def __sub__(self, other):
        self._check(other)
        return GridFunction(self.grid, self.values - other.values, self.domain)

    def __mul__(self, c):
        return GridFunction(self.grid, self.values * c, self.domain)

    __rmul__ = __mul__

    def l2(self) -> float:
        """Continuum-scaled L^2 norm (cell volume depends on the domain)."""
        cell = self.grid.dx if self.domain == "space" else self.grid.dw
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * cell))


def dft(f: GridFunction) -> GridFunction:
    """Forward transform ``h^n fftshift(fft(ifftshift(f)))``."""
    if f.domain != "space":
        raise DomainTagMismatch("dft expects a space-domain function")
    v = np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(f.values))) * f.grid.dx
    return GridFunction(f.grid, v, "frequency")


def idft(F: GridFunction) -> GridFunction:
    """Inverse transform ``L^-n fftshift(ifft(ifftshift(F))) M^n``."""
    if F.domain != "frequency":
        raise DomainTagMismatch("idft expects a frequency-domain function")
    v = np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(F.values))) * (F.grid.size * F.grid.dw)
    return GridFunction(F.grid, v, "space")


def lp_norm(f: GridFunction, p) -> float:
    """Riemann-sum ``L^p`` norm with cell volume ``h^n`` (max for ``p = inf``)."""
    a = np.abs(f.values)
    if np.isinf(p):
        return float(a.max())
    cell = f.grid.dx if f.domain == "space" else f.grid.dw
    return float((np.sum(a ** p) * cell) ** (1.0 / p))
