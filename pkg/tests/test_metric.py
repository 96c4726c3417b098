import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from alphamod import covering as C
from alphamod._errors import DimensionMismatch, EmptyWindow, PointOutsideWindow, WindowTooSmall
from alphamod.groups import builtin
from alphamod.lattice import make_lattice
from alphamod.metric import build_graph, chain_distance, distortion_report, fit_distortion
from alphamod.quasinorm import QuasiNorm


@pytest.fixture(scope="module")
def line_graph():
    G = builtin("abelian(1)")
    nm = QuasiNorm(G)
    cov = C.build_uniform(G, make_lattice(G, (1.0,)), nm, 1.0, window=30.0)
    return build_graph(cov)


@pytest.fixture(scope="module")
def heis_graph(H, nH, NH):
    return build_graph(C.build_uniform(H, NH, nH, 1.66, window=4.0))


def line_oracle(x, y):
    """Pieces (n-1, n+1): chains step by one lattice point."""
    P = [n for n in range(-40, 41) if abs(x - n) < 1]
    Q = [n for n in range(-40, 41) if abs(y - n) < 1]
    return min(abs(p - q) for p in P for q in Q) + 1


def test_line_graph_is_path(line_graph):
    cov = line_graph.cov
    A = line_graph.adjacency.toarray()
    k = cov.indices[:, 0]
    for i in range(len(k)):
        nb = sorted(k[A[i] > 0])
        assert nb == sorted(v for v in (k[i] - 1, k[i] + 1) if v in k)


@given(st.floats(-12, 12), st.floats(-12, 12))
def test_line_distances(x, y):
    G = builtin("abelian(1)")
    cov = C.build_uniform(G, make_lattice(G, (1.0,)), QuasiNorm(G), 1.0, window=30.0)
    g = build_graph(cov)
    d = chain_distance(g, [x], [y])
    assert d == (0 if x == y else line_oracle(x, y))


def test_zero_and_one(heis_graph):
    x = np.array([0.3, -0.2, 0.1])
    assert chain_distance(heis_graph, x, x) == 0
    assert chain_distance(heis_graph, x, np.array([0.1, 0.1, 0.0])) == 1


def test_besov_witnesses(H, nH):
    g = build_graph(C.build_besov(H, nH, 22))
    for m in range(1, 11):
        assert chain_distance(g, [2.0 ** m, 0, 0], [0, 0, 2.0 ** (2 * m + 1)]) == 1


def test_euclidean_dyadic_witnesses_grow():
    E = builtin("abelian(3)")
    g = build_graph(C.build_besov(E, QuasiNorm(E, "euclidean"), 22))
    d = [chain_distance(g, [2.0 ** m, 0, 0], [0, 0, 2.0 ** (2 * m + 1)]) for m in range(1, 11)]
    assert all(b > a for a, b in zip(d, d[1:]))
    assert all(v >= m - 2 for m, v in zip(range(1, 11), d))


def test_besov_graph_is_path(H, nH):
    g = build_graph(C.build_besov(H, nH, 6))
    A = g.adjacency.toarray()
    np.testing.assert_array_equal(A, np.eye(7, k=1) + np.eye(7, k=-1))


def test_heisenberg_graph_connected(heis_graph):
    from scipy.sparse.csgraph import breadth_first_order
    assert len(breadth_first_order(heis_graph.adjacency, 0, return_predecessors=False)) == len(heis_graph.nodes)


@given(st.lists(st.floats(-2.5, 2.5), min_size=9, max_size=9))
def test_metric_axioms_on_cayley_graph(v):
    H = builtin("heisenberg(1)")
    from alphamod.lattice import default_lattice
    g = build_graph(C.build_uniform(H, default_lattice(H), QuasiNorm(H), 1.66, window=4.0))
    x, y, z = np.reshape(v, (3, 3))
    dxy, dyx = chain_distance(g, x, y), chain_distance(g, y, x)
    assert dxy == dyx
    assert dxy <= chain_distance(g, x, z) + chain_distance(g, z, y)


def test_windowed_graph_matches_cayley(H, nH, NH, rng):
    cov = C.build_uniform(H, NH, nH, 1.66, window=5.0)
    g_cay = build_graph(cov)
    generic = dataclasses.replace(cov, family="alpha", params={"alpha": 0.0, "r": 1.66}, _adj=None)
    g_win = build_graph(generic)
    checked = 0
    for _ in range(25):
        x, y = nH.sample_ball(rng, 2, 3.0)
        try:
            d = chain_distance(g_win, x, y)
        except WindowTooSmall:
            continue
        assert d == chain_distance(g_cay, x, y)
        checked += 1
    assert checked > 10


def test_window_errors(H, nH):
    cov = C.build_alpha(H, __import__("alphamod.lattice", fromlist=["x"]).default_lattice(H),
                        nH, 0.5, 2.1, window=4.0)
    g = build_graph(cov)
    with pytest.raises(PointOutsideWindow):
        chain_distance(g, np.zeros(3), np.array([30.0, 0, 0]))
    with pytest.raises(EmptyWindow):
        build_graph(cov, window=0.01)


def test_fit_distortion_identity():
    d = np.array([1, 2, 3, 5, 8])
    r = fit_distortion(d, d)
    assert (r.L_est, r.C_est, r.fits) == (1.0, 0.0, True)


def test_fit_distortion_scaling():
    d = np.arange(1, 20)
    r = fit_distortion(d, 2 * d)
    assert (r.L_est, r.C_est) == (2.0, 0.0)
    # C is minimised first: d + 3 <= 4 d already holds with C = 0
    r = fit_distortion(d, d + 3)
    assert (r.L_est, r.C_est) == (4.0, 0.0)
    r = fit_distortion(d, d + 3, L_cap=1.0)
    assert (r.L_est, r.C_est) == (1.0, 3.0)
    r = fit_distortion(d, d ** 2, L_cap=3.0, C_cap=5.0)
    assert not r.fits and r.max_violation > 0
    with pytest.raises(DimensionMismatch):
        fit_distortion([1, 2], [1])


def test_distortion_report_identity(heis_graph, rng, nH):
    pairs = [tuple(nH.sample_ball(rng, 2, 3.0)) for _ in range(20)]
    r = distortion_report(lambda x: x, heis_graph, heis_graph, pairs)
    assert (r.L_est, r.C_est) == (1.0, 0.0)


def test_line_inclusion_is_lipschitz():
    # identity from the uniform covering to the alpha = 1/2 covering on the line
    G = builtin("abelian(1)")
    nm = QuasiNorm(G)
    N = make_lattice(G, (1.0,))
    fits = []
    for W in (40.0, 80.0):
        a = build_graph(C.build_uniform(G, N, nm, 1.0, window=W + 20))
        b = build_graph(C.build_alpha(G, N, nm, 0.5, 1.3, window=W + 20))
        rng = np.random.default_rng(0)
        pairs = [tuple(rng.uniform(-W / 2, W / 2, size=(2, 1))) for _ in range(40)]
        ds = [chain_distance(a, x, y) for x, y in pairs]
        dd = [chain_distance(b, x, y) for x, y in pairs]
        assert all(q <= p + 1 for p, q in zip(ds, dd))
        fits.append(fit_distortion(ds, dd, L_cap=100, C_cap=100))
    assert fits[0].C_est <= 2 and fits[1].C_est <= 2
