import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from alphamod._errors import UnknownName, WrongGroup
from alphamod.groups import builtin
from alphamod.quasinorm import (
    QuasiNorm,
    estimate_equivalence,
    estimate_quasi_constant,
    sample_unit_sphere,
)

coords = st.floats(-10, 10, allow_nan=False, allow_infinity=False)


def test_formula_values(H):
    assert QuasiNorm(H).value([0.0, 0.0, 4.0]) == pytest.approx(2.0, abs=1e-15)
    assert QuasiNorm(H, "cygan_koranyi").value([0.0, 0.0, 1.0]) == pytest.approx(2.0, abs=1e-15)


def test_distance_example(nH):
    assert nH.distance(np.zeros(3), np.array([1.0, 0.0, 0.0])) == pytest.approx(1.0)


@pytest.mark.parametrize("kind", ["homogeneous2", "cygan_koranyi"])
@given(arrays(np.float64, (3,), elements=coords), st.floats(0.01, 100))
def test_homogeneity(kind, x, r):
    G = builtin("heisenberg(1)")
    nm = QuasiNorm(G, kind)
    assert nm.value(G.dilate(r, x)) == pytest.approx(r * nm.value(x), rel=1e-10, abs=1e-300)


@given(arrays(np.float64, (4,), elements=coords))
def test_symmetry(x):
    G = builtin("engel_bch")
    nm = QuasiNorm(G)
    assert nm.value(G.inverse(x)) == pytest.approx(nm.value(x), rel=1e-12)


def test_box_bound_encloses_ball(H, rng):
    for kind in ("homogeneous2", "cygan_koranyi"):
        nm = QuasiNorm(H, kind)
        x = nm.sample_ball(rng, 5000, 3.0)
        assert np.all(nm.value(x) < 3.0)
        assert np.all(np.abs(x) <= nm.box_bound(3.0))


def test_unit_sphere_samples(H, rng):
    nm = QuasiNorm(H)
    u = sample_unit_sphere(nm, rng, 1000)
    np.testing.assert_allclose(nm.value(u), 1.0, rtol=1e-12)


def test_cygan_koranyi_subadditive(H):
    est = estimate_quasi_constant(QuasiNorm(H, "cygan_koranyi"), samples=5000, seed=0)
    assert est.c_est <= 1.0 + 1e-6


def test_homogeneous2_constant_stable(H):
    vals = [estimate_quasi_constant(QuasiNorm(H), samples=5000, seed=s).c_est for s in (0, 1, 2)]
    assert min(vals) >= 1.0
    assert max(vals) / min(vals) <= 1.02


def test_equivalence_constants_stable(H):
    a, b = QuasiNorm(H), QuasiNorm(H, "cygan_koranyi")
    r = [estimate_equivalence(a, b, samples=4000, seed=s) for s in (0, 1)]
    for lo, hi in r:
        assert 0 < lo <= hi < np.inf
    assert r[0][0] == pytest.approx(r[1][0], rel=0.02)
    assert r[0][1] == pytest.approx(r[1][1], rel=0.02)


def test_kind_errors():
    with pytest.raises(WrongGroup):
        QuasiNorm(builtin("engel_bch"), "cygan_koranyi")
    with pytest.raises(WrongGroup):
        QuasiNorm(builtin("heisenberg(1)"), "euclidean")
    with pytest.raises(UnknownName):
        QuasiNorm(builtin("abelian(2)"), "taxicab")
