import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alphamod._errors import BudgetExceeded, DimensionMismatch, DomainTagMismatch, GridMismatch
from alphamod.grid import GridFunction, GridSpec, dft, idft, lp_norm


def test_axes_layout():
    g = GridSpec.make(1, 4.0, 8)
    np.testing.assert_allclose(g.space_axes()[0], [-2, -1.5, -1, -0.5, 0, 0.5, 1, 1.5])
    np.testing.assert_allclose(g.freq_axes()[0], np.arange(-4, 4) / 4)
    assert g.freq_extent[0] == 1.0
    assert g.dx * g.dw * g.size == pytest.approx(1.0)


def test_self_dual_gaussian():
    # exp(-pi x^2) is its own continuum Fourier transform
    g = GridSpec.make(2, 16.0, 128)
    x = g.space_points()
    f = GridFunction(g, np.exp(-np.pi * np.sum(x ** 2, axis=1)))
    F = dft(f)
    w = g.freq_points()
    np.testing.assert_allclose(F.values.ravel(), np.exp(-np.pi * np.sum(w ** 2, axis=1)), atol=1e-8)


def test_shifted_gaussian_phase():
    g = GridSpec.make(1, 32.0, 256)
    x = g.space_axes()[0]
    f = GridFunction(g, np.exp(-np.pi * (x - 1.5) ** 2))
    w = g.freq_axes()[0]
    np.testing.assert_allclose(dft(f).values, np.exp(-np.pi * w ** 2 - 2j * np.pi * 1.5 * w), atol=1e-8)


@settings(max_examples=25)
@given(st.integers(0, 2 ** 31 - 1), st.sampled_from([(8, 16), (16, 8), (32, 8)]),
       st.floats(0.5, 20.0))
def test_parseval_and_inverse(seed, M, L):
    rng = np.random.default_rng(seed)
    g = GridSpec.make(2, L, M)
    f = GridFunction(g, rng.normal(size=g.shape) + 1j * rng.normal(size=g.shape))
    F = dft(f)
    assert F.l2() == pytest.approx(f.l2(), rel=1e-10)
    np.testing.assert_allclose(idft(F).values, f.values, atol=1e-10)
    assert lp_norm(f, 2) == pytest.approx(f.l2(), rel=1e-12)


def test_lp_norms():
    g = GridSpec.make(1, 8.0, 8)
    f = GridFunction(g, np.ones(8))
    assert lp_norm(f, 1) == pytest.approx(8.0)
    assert lp_norm(f, 3) == pytest.approx(2.0)
    assert lp_norm(f * 3, np.inf) == 3.0


def test_arithmetic_and_tags():
    g = GridSpec.make(1, 1.0, 8)
    f = GridFunction(g, np.arange(8))
    np.testing.assert_array_equal((f + f - 2 * f).values, 0)
    with pytest.raises(DomainTagMismatch):
        f + dft(f)
    with pytest.raises(GridMismatch):
        f + GridFunction(GridSpec.make(1, 2.0, 8), np.arange(8))
    with pytest.raises(DomainTagMismatch):
        idft(f)
    with pytest.raises(DomainTagMismatch):
        dft(dft(f))
    with pytest.raises(DomainTagMismatch):
        GridFunction(g, np.zeros(8), "time")
    with pytest.raises(DimensionMismatch):
        GridFunction(g, np.full(8, np.nan))


@pytest.mark.parametrize("L,M,err", [((1.0,), (12,), DimensionMismatch),
                                      ((1.0,), (4,), DimensionMismatch),
                                      ((0.0,), (8,), DimensionMismatch),
                                      ((1.0, 1.0), (8,), DimensionMismatch),
                                      ((1.0,) * 3, (256,) * 3, BudgetExceeded)])
def test_gridspec_errors(L, M, err):
    with pytest.raises(err):
        GridSpec(L, M)
