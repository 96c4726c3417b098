import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from alphamod import covering as C
from alphamod._errors import DimensionMismatch, GridIncompatible, StepUnsupported, WrongGroup
from alphamod.bapu import build_alpha_bapu, bump_profile
from alphamod.embeddings import (block_swap, compatibility_sup, covering_affine_maps,
                                 engel_blowup_witness, essential_support, geometric_embed,
                                 piece_affine_map)
from alphamod.grid import GridFunction, GridSpec, dft
from alphamod.groups import builtin
from alphamod.lattice import default_lattice, make_lattice
from alphamod.modnorm import gaussian_packet
from alphamod.quasinorm import QuasiNorm


def paper_jacobian(k):
    """Hand-derived Jacobian at y = 0 of y -> k * y for the printed Engel law."""
    x1, x2, x3, _ = k
    return np.array([[1, 0, 0, 0],
                     [0, 1, 0, 0],
                     [-x2 / 2, x1 / 2, 1, 0],
                     [-x3 / 2 - x1 * x2 / 12, x1 * x1 / 12, x1 / 2, 1]])


def test_engel_paper_witness_matches_hand_jacobian():
    w = engel_blowup_witness("paper_law")
    base = np.array([12.0, 2.0, 1.0, 1.0])
    Tk = paper_jacobian(base)
    expect = [np.linalg.norm(paper_jacobian(n * base) @ np.linalg.inv(Tk), 2) for n in w.n_list]
    np.testing.assert_allclose(w.values, expect, rtol=1e-8)
    np.testing.assert_allclose(w.values[:3], [1.0, 6.679224, 77.55765], rtol=1e-6)
    assert w.slope == pytest.approx(2.611, abs=1e-3)
    assert w.to_csv().splitlines()[0] == "n,value"


def test_engel_bch_second_difference():
    # the degree-three BCH term -[y,[x,y]]/12 leaves a second difference n/3
    w = engel_blowup_witness("full_bch")
    np.testing.assert_allclose(w.values, np.asarray(w.n_list) / 3.0, rtol=1e-9)
    assert w.slope == pytest.approx(1.0, abs=1e-9)


def test_engel_abelian_control():
    w = engel_blowup_witness("full_bch", group=builtin("abelian(4)"))
    assert max(w.values) < 1e-9
    w = engel_blowup_witness("paper_law", group=builtin("abelian(4)"))
    np.testing.assert_allclose(w.values, 1.0)


def test_engel_errors():
    with pytest.raises(WrongGroup):
        engel_blowup_witness(group=builtin("heisenberg(1)"))
    with pytest.raises(DimensionMismatch):
        engel_blowup_witness(n_list=(2, 1))
    with pytest.raises(DimensionMismatch):
        engel_blowup_witness("other")


def numeric_jacobian(G, c, rho, h=1e-4):
    E = np.eye(G.dim) * h
    f = lambda y: G.multiply(c, G.dilate(rho, y))
    return ((f(E) - f(-E)) / (2 * h)).T


@given(st.lists(st.integers(-3, 3), min_size=3, max_size=3), st.sampled_from([0.0, 0.5]))
def test_piece_map_is_translation_after_dilation(k, alpha):
    H = builtin("heisenberg(1)")
    nH = QuasiNorm(H)
    N = default_lattice(H)
    if alpha > 0 and not any(k):
        return
    A = piece_affine_map(N, nH, alpha, 2.1, k, samples=50)
    kp = N.point(k)
    s = float(nH.value(kp)) ** (alpha / (1 - alpha)) if alpha else 1.0
    c = H.dilate(s, kp)
    np.testing.assert_allclose(A.offset, c, atol=1e-12)
    np.testing.assert_allclose(A.linear, numeric_jacobian(H, c, 2.1 * s), rtol=1e-8, atol=1e-8)


def test_unit_offdiagonal(H, nH):
    A = piece_affine_map(make_lattice(H, (1.0, 1.0, 0.5)), nH, 0.0, 1.0, (2, 0, 0))
    off = A.linear - np.diag(np.diag(A.linear))
    assert np.count_nonzero(off) == 1 and abs(off).max() == pytest.approx(1.0)


def test_step_three_rejected():
    E = builtin("engel_bch")
    with pytest.raises(StepUnsupported):
        piece_affine_map(default_lattice(E), QuasiNorm(E), 0.0, 3.0, (1, 0, 0, 0))


def sigma_max(d):
    # ||I + e3 u^T||_2 with |u| = |d|/2 for a horizontal displacement d
    rho = np.hypot(d[0], d[1]) / 2
    return (rho + np.sqrt(rho * rho + 4)) / 2


def test_uniform_compatibility(H, nH, NH):
    cov = C.build_uniform(H, NH, nH, 1.66, window=4.0)
    val = compatibility_sup(cov)
    assert val == pytest.approx(1.5129, abs=1e-4)
    # step two: T_i^-1 T_j = I + ad(c_j - c_i)/2, so only horizontal displacements matter
    assert val == pytest.approx(sigma_max([1.7046, 0.0]), abs=1e-3)
    maps = covering_affine_maps(cov, [0, 1])
    d = cov.centers[1] - cov.centers[0]
    P = np.linalg.solve(maps[0].linear, maps[1].linear)
    assert np.linalg.norm(P, 2) == pytest.approx(sigma_max(d), rel=1e-12)


def test_besov_compatibility(H, nH):
    assert compatibility_sup(C.build_besov(H, nH, 8)) == pytest.approx(4.0)


def test_geometric_embed_is_tensor_product(H):
    src = GridSpec.make(2, 4.0, 32)
    dst = GridSpec((4.0, 4.0, 2.0), (64, 64, 16))
    f = gaussian_packet(src, [0.5, -0.5], 1.0, domain="frequency")
    g = geometric_embed(f, H, dst, xi_halfwidth=2.0)
    F = g.values
    w3 = dst.freq_axes()[2]
    xi = bump_profile(w3 / 2.0)
    np.testing.assert_allclose(F[16:48, 16:48, :], f.values[:, :, None] * xi[None, None, :],
                               atol=1e-15)
    assert np.abs(F[:16]).max() == 0
    gs = geometric_embed(GridFunction(src, np.fft.fftshift(np.fft.ifftn(
        np.fft.ifftshift(f.values))) * src.size * src.dw), H, dst, 2.0)
    assert gs.domain == "space"
    np.testing.assert_allclose(dft(gs).values, F, atol=1e-12)


def test_geometric_embed_errors(H):
    src = GridSpec.make(2, 4.0, 32)
    f = GridFunction(src, np.zeros(src.shape), "frequency")
    with pytest.raises(GridIncompatible):
        geometric_embed(f, H, GridSpec((2.0, 4.0, 2.0), (64, 64, 16)))
    with pytest.raises(GridIncompatible):
        geometric_embed(f, H, GridSpec((4.0, 4.0, 2.0), (16, 64, 16)))
    with pytest.raises(GridIncompatible):
        geometric_embed(GridFunction(GridSpec.make(3, 1.0, 8), np.zeros(512)), H,
                        GridSpec.make(3, 1.0, 8))


def test_block_swap():
    g = GridSpec.make(1, 4.0, 256)
    f = gaussian_packet(g, [3.0], 1.0, domain="frequency")
    s = block_swap(f, 3.0, -12.0, 1.0)
    assert s.l2() == pytest.approx(f.l2(), rel=1e-14)
    np.testing.assert_array_equal(block_swap(s, 3.0, -12.0, 1.0).values, f.values)
    w = g.freq_axes()[0]
    assert abs(w[np.argmax(np.abs(s.values))] + 12.0) < 1e-12
    with pytest.raises(GridIncompatible):
        block_swap(f, 0.0, 0.5, 1.0)


def test_essential_support_of_gaussian():
    G = builtin("abelian(1)")
    cov = C.build_uniform(G, make_lattice(G, (1.0,)), QuasiNorm(G), 1.0, window=10.0)
    grid = GridSpec.make(1, 32.0, 1024)
    b = build_alpha_bapu(cov, grid, 0.6)
    es = essential_support(gaussian_packet(grid, [3.0], 0.3, domain="frequency"), cov, b, tol=1e-6)
    assert cov.indices[es.dominant_row, 0] == 3
    assert set(cov.indices[es.rows, 0]) <= {2, 3, 4}
