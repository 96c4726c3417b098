import numpy as np
import pytest
from scipy.integrate import trapezoid

from alphamod import covering as C
from alphamod._errors import DenominatorVanishes, StepUnsupported
from alphamod.bapu import (bump_profile, build_alpha_bapu, build_besov_bapu, export_bapu,
                           load_bapu_members, smooth_step, validate_bapu)
from alphamod.grid import GridSpec
from alphamod.groups import builtin
from alphamod.lattice import default_lattice, make_lattice
from alphamod.quasinorm import QuasiNorm


@pytest.fixture(scope="module")
def line():
    G = builtin("abelian(1)")
    nm = QuasiNorm(G)
    cov = C.build_uniform(G, make_lattice(G, (1.0,)), nm, 1.0, window=8.0)
    grid = GridSpec.make(1, 8.0, 256)
    return cov, grid, build_alpha_bapu(cov, grid, 0.6)


def test_profiles():
    assert bump_profile(0.0) == pytest.approx(np.exp(-1.0))
    assert bump_profile(1.0) == 0.0 and bump_profile(-1.2) == 0.0
    t = np.linspace(-1, 2, 301)
    s = smooth_step(t)
    assert s[0] == 0 and s[-1] == 1 and np.all(np.diff(s) >= 0)
    np.testing.assert_allclose(s + smooth_step(1 - t), 1.0, atol=1e-15)


def test_line_members_match_direct_formula(line):
    cov, grid, b = line
    w = grid.freq_axes()[0]
    n = np.arange(-14, 15)
    g = bump_profile(w[None, :] - n[:, None])
    with np.errstate(invalid="ignore"):
        psi = g / g.sum(axis=0)
    inside = np.abs(w) < 8.0
    for k in (-3, 0, 2, 5):
        np.testing.assert_allclose(b.member(k).values[inside], psi[n == k][0][inside], atol=1e-14)


def test_line_partition_and_l1(line):
    cov, grid, b = line
    rep = validate_bapu(b, members=3, seed=1)
    assert rep["partition_error"] <= 1e-9
    assert rep["partition_error_random"] <= 1e-9
    assert rep["negativity"] == 0 and rep["leakage"] == 0
    # the coarse grid aliases the tails; refining converges to the quadrature value
    assert rep["l1_max"] <= 1.0666
    rep = validate_bapu(b, p_grid_refinement=4, members=1, seed=1)
    assert rep["l1_max"] == pytest.approx(1.06654, abs=5e-4)


def test_line_member_l1_oracle(line):
    # psi_0 is a smooth bump on (-1, 1); its inverse transform's L1 norm by direct quadrature
    cov, grid, b = line
    w = np.linspace(-1, 1, 4001)
    n = np.arange(-3, 4)
    g = bump_profile(w[None, :] - n[:, None])
    psi0 = g[3] / g.sum(axis=0)
    x = np.linspace(-40, 40, 8001)
    fx = trapezoid(psi0[None, :] * np.cos(2 * np.pi * x[:, None] * w[None, :]), w, axis=1)
    assert trapezoid(np.abs(fx), x) == pytest.approx(1.06654, abs=1e-4)


def test_translation_covariance(line):
    cov, grid, b = line
    w = grid.freq_axes()[0]
    m0 = b.member(0).values
    for k in (1, 3):
        shifted = b.member(k).values
        # psi_k(w) = psi_0(w - k) on grid points where both are inside the window
        s = int(round(k * grid.L[0]))
        inside = np.abs(w) < 6.0
        np.testing.assert_allclose(shifted[inside], np.roll(m0, s)[inside], atol=1e-13)


def test_support_in_ball(H, nH, NH):
    cov = C.build_uniform(H, NH, nH, 1.66, window=3.0)
    b = build_alpha_bapu(cov, GridSpec.make(3, (4.0, 4.0, 2.0), 32), 1.6)
    assert validate_bapu(b, members=2)["leakage"] == 0.0


def test_besov_dilation_covariance(H, nH):
    # psi_{m+1}(D_2 x) = psi_m(x) once the core profile is out of reach (m >= 2)
    cov = C.build_besov(H, nH, 8)
    b = build_besov_bapu(cov, GridSpec((1 / 32, 1 / 32, 1 / 16384), (64, 64, 64)))
    assert b.record["m_top"] == 8
    rng = np.random.default_rng(3)
    x = nH.sample_ball(rng, 500, 16.0)
    for m in range(2, 7):
        v1 = b.evaluate(x, [m])[0]
        v2 = b.evaluate(H.dilate(2.0, x), [m + 1])[0]
        np.testing.assert_allclose(v2, v1, atol=1e-12)
    rep = validate_bapu(b, members=2)
    assert rep["partition_error"] < 1e-12 and rep["partition_error_random"] < 1e-12


def test_besov_small_grid_cap(H, nH):
    cov = C.build_besov(H, nH, 8)
    b = build_besov_bapu(cov, GridSpec((2.0, 2.0, 0.5), (64, 64, 128)))
    assert b.record["m_top"] == 2


def test_besov_core_on_small_frequencies(H, nH):
    cov = C.build_besov(H, nH, 8)
    b = build_besov_bapu(cov, GridSpec((2.0, 2.0, 0.5), (64, 64, 128)))
    np.testing.assert_allclose(b.evaluate(np.zeros((1, 3)))[:, 0], [1, 0, 0])


def test_denominator_vanishes():
    G = builtin("abelian(1)")
    nm = QuasiNorm(G)
    cov = C.build_uniform(G, make_lattice(G, (1.0,)), nm, 1.0, window=4.0)
    with pytest.raises(DenominatorVanishes) as e:
        build_alpha_bapu(cov, GridSpec.make(1, 8.0, 64), 0.4)
    assert e.value.info["witness"] is not None
    with pytest.raises(DenominatorVanishes):
        build_alpha_bapu(cov, GridSpec.make(1, 8.0, 64), 1.2)


def test_step_three_unsupported():
    E = builtin("engel_bch")
    nm = QuasiNorm(E)
    cov = C.build_uniform(E, default_lattice(E), nm, 3.0, window=3.0, verify=False)
    with pytest.raises(StepUnsupported):
        build_alpha_bapu(cov, GridSpec.make(4, 4.0, 8), 1.0)


def test_export_roundtrip(line, tmp_path):
    cov, grid, b = line
    pos = [b.member_position(k) for k in (-1, 0, 1)]
    export_bapu(b, tmp_path / "psi", pos)
    vals, side = load_bapu_members(tmp_path / "psi")
    assert side["indices"] == [[-1], [0], [1]] and side["domain"] == "frequency"
    np.testing.assert_array_equal(vals[1], b.member(0).values)
