import itertools

import numpy as np
import pytest

from alphamod._errors import NonPositiveScale, NotClosed
from alphamod.groups import builtin
from alphamod.lattice import count_ball, default_lattice, enumerate_ball, growth_function, make_lattice
from alphamod.quasinorm import QuasiNorm


def brute_count(G, scales, nm, R, center=None):
    """Scan the integer box that encloses the ball (independent of the module scan)."""
    scales = np.asarray(scales, dtype=float)
    c = np.zeros(G.dim) if center is None else np.asarray(center, dtype=float)
    # the box of B(c, R) is contained in c * box(R); widen generously
    b = np.abs(c) + nm.box_bound(R) * 4 + 4
    axes = [np.arange(-np.ceil(bi / s), np.ceil(bi / s) + 1) * s for bi, s in zip(b, scales)]
    pts = np.stack(np.meshgrid(*axes, indexing="ij"), -1).reshape(-1, G.dim)
    d = nm.value(G.multiply(G.inverse(c), pts))
    return int((d < R).sum())


@pytest.mark.parametrize("name,scales,R", [
    ("abelian(2)", (1, 1), 5.5),
    ("heisenberg(1)", (2, 2, 1), 6.0),
    ("heisenberg(1)", (2, 2, 1), 2.1),
    ("engel_bch", (12, 2, 1, 1), 4.0),
])
def test_count_matches_brute_force(name, scales, R):
    G = builtin(name)
    nm = QuasiNorm(G)
    N = make_lattice(G, scales)
    assert count_ball(N, nm, R) == brute_count(G, scales, nm, R)


def test_off_center_count(H, nH, NH):
    c = np.array([2.0, 4.0, 3.0])
    assert count_ball(NH, nH, 3.3, center=c) == brute_count(H, (2, 2, 1), nH, 3.3, center=c)


def test_enumerate_contains_listed_points(H, nH, NH):
    pts = {tuple(p) for p in enumerate_ball(NH, nH, 2.1)}
    for q in [(2, 0, 0), (-2, 0, 0), (0, 2, 0), (0, -2, 0)] + [(0, 0, s * t) for t in (1, 2, 3, 4)
                                                             for s in (1, -1)]:
        assert tuple(float(v) for v in q) in pts


def test_paper_lattices_accepted(H):
    make_lattice(H, (2, 2, 1))
    make_lattice(builtin("engel_paper_law"), (12, 2, 1, 1))
    assert default_lattice(builtin("engel_bch")).scales == (12.0, 2.0, 1.0, 1.0)


def test_unit_lattice_rejected_with_witness(H):
    with pytest.raises(NotClosed) as exc:
        make_lattice(H, (1, 1, 1))
    a, b = exc.value.info["witness"]
    z = H.multiply(a, b)
    assert z[2] % 1 == pytest.approx(0.5)


def test_nonpositive_scale(H):
    with pytest.raises(NonPositiveScale):
        make_lattice(H, (2, 0, 1))


@pytest.mark.parametrize("name,scales,target,tol", [
    ("abelian(2)", (1, 1), 2.0, 0.2),
    ("heisenberg(1)", (2, 2, 1), 4.0, 0.3),
    ("engel_bch", (12, 2, 1, 1), 7.0, 0.5),
])
def test_growth_slope(name, scales, target, tol):
    G = builtin(name)
    radii = 4.0 * 2.0 ** (np.arange(7) / 2.0)
    res = growth_function(make_lattice(G, scales), QuasiNorm(G), radii)
    assert abs(res.slope - target) <= tol


def test_lattice_closed_under_products(H, NH, rng):
    k = rng.integers(-5, 6, size=(200, 3)) * NH.gamma
    l = rng.integers(-5, 6, size=(200, 3)) * NH.gamma
    assert NH.contains(H.multiply(k, l)).all()
    assert NH.contains(H.inverse(k)).all()


def test_integer_coords_round_trip(NH):
    ks = np.array(list(itertools.product(range(-2, 3), repeat=3)))
    np.testing.assert_array_equal(NH.integer_coords(NH.point(ks)), ks)
