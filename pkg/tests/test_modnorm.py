import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alphamod import covering as C
from alphamod._errors import GridMismatch, NotBandLimited, ParamMismatch
from alphamod.bapu import build_alpha_bapu, build_besov_bapu
from alphamod.grid import GridFunction, GridSpec, dft
from alphamod.groups import builtin
from alphamod.lattice import make_lattice
from alphamod.modnorm import (NormParams, alpha_mod_norm, besov_norm, block, gaussian_packet,
                              holder_check, pairing, schwartz_decay_profile, spectral_leak)
from alphamod.quasinorm import QuasiNorm

GRID = GridSpec.make(1, 32.0, 1024)


@pytest.fixture(scope="module")
def line():
    G = builtin("abelian(1)")
    cov = C.build_uniform(G, make_lattice(G, (1.0,)), QuasiNorm(G), 1.0, window=10.0)
    return build_alpha_bapu(cov, GRID, 0.6)


@pytest.fixture(scope="module")
def line_half():
    G = builtin("abelian(1)")
    cov = C.build_alpha(G, make_lattice(G, (1.0,)), QuasiNorm(G), 0.5, 1.3, window=12.0)
    return build_alpha_bapu(cov, GRID, 1.25)


def test_blocks_sum_to_function(line):
    f = gaussian_packet(GRID, [1.5], 1.0)
    total = sum((block(f, line, k) for k in line.covering.indices[line.rows, 0]),
                GridFunction(GRID, np.zeros(GRID.size)))
    np.testing.assert_allclose(total.values, f.values, atol=1e-12)


def test_block_norms_match_member_formula(line):
    f = gaussian_packet(GRID, [2.3], 0.6, domain="frequency")
    F = f.values
    nb = alpha_mod_norm(f, line, NormParams(2, 2, 1.5, 0.0))
    for i, (k,) in enumerate(nb.indices):
        psi = line.member(k).values
        assert nb.eps[i] == pytest.approx(np.sqrt(np.sum(np.abs(psi * F) ** 2) * GRID.dw),
                                          rel=1e-10, abs=1e-300)
        assert nb.weights[i] == pytest.approx((1 + k * k) ** 0.75)
    assert nb.recompute() == pytest.approx(nb.total, rel=1e-14)


@settings(max_examples=15)
@given(st.floats(-5, 5), st.floats(0.3, 2.0))
def test_l2_sandwich(w0, sigma):
    G = builtin("abelian(1)")
    cov = C.build_uniform(G, make_lattice(G, (1.0,)), QuasiNorm(G), 1.0, window=10.0)
    b = build_alpha_bapu(cov, GRID, 0.6)
    f = gaussian_packet(GRID, [w0], sigma, domain="frequency")
    nrm = alpha_mod_norm(f, b, NormParams()).total
    l2 = f.l2()
    # sum psi_k = 1 with at most n_q = 3 overlaps and 0 <= psi_k <= 1
    assert l2 / np.sqrt(3) * (1 - 1e-9) <= nrm <= l2 * (1 + 1e-9)


def test_lp_path_matches_parseval(line):
    f = gaussian_packet(GRID, [0.7], 0.8)
    a = alpha_mod_norm(f, line, NormParams(2, 2, 0, 0)).eps
    b = alpha_mod_norm(f, line, NormParams(2.0000001, 2, 0, 0)).eps
    np.testing.assert_allclose(a, b, rtol=1e-5, atol=1e-12)


def test_pairing_matches_space_sum(line):
    f = gaussian_packet(GRID, [1.0], 0.9, x0=[0.5])
    g = gaussian_packet(GRID, [-1.2], 1.1, x0=[-0.3])
    direct = sum(np.sum(block(f, line, k).values * block(g, line, k).values) * GRID.dx
                 for k in line.covering.indices[line.rows, 0])
    assert pairing(f, g, line) == pytest.approx(direct, abs=1e-12)


@settings(max_examples=10)
@given(st.floats(-4, 4), st.floats(-4, 4), st.sampled_from([1.5, 2.0, 3.0]),
       st.sampled_from([1.5, 2.0, 4.0]), st.floats(-1, 1))
def test_holder(w1, w2, p, q, s):
    G = builtin("abelian(1)")
    cov = C.build_uniform(G, make_lattice(G, (1.0,)), QuasiNorm(G), 1.0, window=10.0)
    b = build_alpha_bapu(cov, GRID, 0.6)
    f = gaussian_packet(GRID, [w1], 1.0)
    g = gaussian_packet(GRID, [w2], 0.7, x0=[0.4])
    ok, lhs, rhs = holder_check(f, g, b, NormParams(p, q, s, 0.0))
    assert ok


def test_params():
    with pytest.raises(ParamMismatch):
        NormParams(0.5)
    with pytest.raises(ParamMismatch):
        NormParams(2, 2, 0, 1.5)
    d = NormParams(1, np.inf, 2.0, 0.5).dual()
    assert (d.p, d.q, d.s, d.alpha) == (np.inf, 1.0, -2.0, 0.5)
    assert NormParams(3, 1.5).dual().p == pytest.approx(1.5)
    assert NormParams().trivial


def test_errors(line, line_half, H, nH):
    f = gaussian_packet(GRID, [0.0], 1.0)
    with pytest.raises(ParamMismatch):
        alpha_mod_norm(f, line, NormParams(alpha=0.5))
    with pytest.raises(GridMismatch):
        alpha_mod_norm(gaussian_packet(GridSpec.make(1, 16.0, 512), [0.0], 1.0), line, NormParams())
    far = gaussian_packet(GRID, [11.0], 1.0)
    assert spectral_leak(far, line) > 1e-6
    with pytest.raises(NotBandLimited) as e:
        alpha_mod_norm(far, line, NormParams())
    assert e.value.exit_code == 3
    b = build_besov_bapu(C.build_besov(H, nH, 8), GridSpec((2.0, 2.0, 0.5), (64, 64, 128)))
    with pytest.raises(ParamMismatch):
        alpha_mod_norm(gaussian_packet(b.grid, None, 1.0), b, NormParams(alpha=1.0))
    with pytest.raises(ParamMismatch):
        besov_norm(f, line, NormParams())


def test_besov_weights(H, nH):
    b = build_besov_bapu(C.build_besov(H, nH, 8), GridSpec((2.0, 2.0, 0.5), (64, 64, 128)))
    f = gaussian_packet(b.grid, None, 1.0, domain="frequency")
    nb = besov_norm(f, b, NormParams(2, 2, 1.0, 1.0))
    np.testing.assert_allclose(nb.weights, 2.0 ** np.arange(len(b)))


def test_gaussian_decay_on_line(line, line_half):
    f = gaussian_packet(GRID, None, 1.0, domain="frequency")
    nb = alpha_mod_norm(f, line, NormParams())
    kn = np.asarray(nb.knorms)
    # Gaussian spectrum: block norms fall by more than half per step beyond |k| = 4
    for k in range(4, 8):
        assert nb.eps[kn == k + 1].max() < 0.5 * nb.eps[kn == k].max()
    assert schwartz_decay_profile(f, line).passes
    assert schwartz_decay_profile(f, line_half).passes


def test_csv_and_summary(line):
    nb = alpha_mod_norm(gaussian_packet(GRID, [1.0], 1.0), line, NormParams(2, np.inf, 1, 0))
    rows = nb.to_csv().splitlines()
    assert rows[0] == "index,knorm,weight,eps" and len(rows) == len(line) + 1
    assert nb.summary()["q"] == "inf"


def test_dft_consistency(line):
    f = gaussian_packet(GRID, [2.0], 0.5)
    a = alpha_mod_norm(f, line, NormParams()).total
    b = alpha_mod_norm(dft(f), line, NormParams()).total
    assert a == pytest.approx(b, rel=1e-12)
