import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from alphamod._errors import (
    DimensionMismatch,
    GradingViolation,
    JacobiViolation,
    StepUnsupported,
    UnknownName,
)
from alphamod.groups import (
    axiom_residuals,
    build_group,
    builtin,
    group_from_json,
    heisenberg_printed_law,
)

coords = st.floats(-5, 5, allow_nan=False, allow_infinity=False)

BCH_GROUPS = ["abelian(3)", "heisenberg(1)", "heisenberg(2)", "free_step2(2)", "free_step2(3)",
              "engel_bch"]


def points(dim):
    return arrays(np.float64, (dim,), elements=coords)


def test_heisenberg_from_layers():
    G = build_group([2, 1], [(0, 1, 2, 1)])
    assert (G.dim, G.homogeneous_dim, G.rank, G.step) == (3, 4, 2, 2)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_heisenberg_homogeneous_dimension(n):
    G = builtin(f"heisenberg({n})")
    assert G.homogeneous_dim == 2 * n + 2
    assert G.dim == 2 * n + 1


def test_engel_homogeneous_dimension():
    G = build_group([2, 1, 1], [(0, 1, 2, 1), (0, 2, 3, 1)])
    assert G.homogeneous_dim == 7
    assert builtin("engel_bch").homogeneous_dim == 7


def test_heisenberg_product_value(H):
    z = H.multiply([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
    np.testing.assert_allclose(z, [1.0, 1.0, -0.5], atol=0)


def test_dilation_example(H):
    np.testing.assert_array_equal(H.dilate(2.0, [1.0, 1.0, 1.0]), [2.0, 2.0, 4.0])


def test_free_step2_two_is_heisenberg():
    F = builtin("free_step2(2)")
    H = builtin("heisenberg(1)")
    assert F.layer_dims == H.layer_dims
    np.testing.assert_array_equal(np.abs(F.structure_tensor), np.abs(H.structure_tensor))


def test_engel_bch_fourth_coordinate():
    # degree-three terms of the fourth coordinate, expanded by hand:
    # (1/12) x1 (x1 y2 - x2 y1) + (1/12) y1 (y1 x2 - y2 x1) plus the
    # bracket term (1/2)(x1 y3 - x3 y1)
    G = builtin("engel_bch")
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=(2, 200, 4))
    z = G.multiply(x, y)
    x1, x2, x3 = x[:, 0], x[:, 1], x[:, 2]
    y1, y2, y3 = y[:, 0], y[:, 1], y[:, 2]
    w = x1 * y2 - x2 * y1
    z3 = x[:, 2] + y[:, 2] + 0.5 * w
    z4 = (x[:, 3] + y[:, 3] + 0.5 * (x1 * y3 - x3 * y1)
          + x1 * w / 12.0 + y1 * (y1 * x2 - y2 * x1) / 12.0)
    np.testing.assert_allclose(z[:, 2], z3, atol=1e-12)
    np.testing.assert_allclose(z[:, 3], z4, atol=1e-12)


def test_engel_inverse_cancels():
    G = builtin("engel_bch")
    x = np.random.default_rng(3).normal(size=(100, 4)) * 3
    np.testing.assert_allclose(G.multiply(x, G.inverse(x)), 0.0, atol=1e-12)


@pytest.mark.parametrize("name", BCH_GROUPS)
def test_axiom_residuals_small(name):
    r = axiom_residuals(builtin(name), 500, seed=1)
    assert r["associativity"] < 1e-12
    assert r["identity"] == 0.0
    assert r["inverse"] < 1e-12
    assert r["dilation"] < 1e-12
    assert r["unimodular"] < 1e-6


def test_engel_paper_law_not_associative():
    r = axiom_residuals(builtin("engel_paper_law"), 1000, seed=0)
    assert r["associativity"] > 1e-3


def test_printed_heisenberg_law_matches(H):
    x, y = np.random.default_rng(5).normal(size=(2, 1000, 3)) * 4
    np.testing.assert_allclose(H.multiply(x, y), heisenberg_printed_law(x, y), rtol=0, atol=1e-12)


@given(points(3), points(3), points(3))
def test_heisenberg_associative(x, y, z):
    G = builtin("heisenberg(1)")
    a = G.multiply(G.multiply(x, y), z)
    b = G.multiply(x, G.multiply(y, z))
    np.testing.assert_allclose(a, b, atol=1e-9)


@given(points(4), points(4), st.floats(0.05, 20))
def test_engel_dilation_automorphism(x, y, r):
    G = builtin("engel_bch")
    a = G.dilate(r, G.multiply(x, y))
    b = G.multiply(G.dilate(r, x), G.dilate(r, y))
    np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-9)


@given(points(5))
def test_inverse_is_negation_in_exponential_coordinates(x):
    G = builtin("heisenberg(2)")
    np.testing.assert_array_equal(G.inverse(x), -x)


def test_group_json_round_trip():
    G = builtin("engel_bch")
    G2 = group_from_json(G.to_json())
    assert G2 == G
    x, y = np.random.default_rng(2).normal(size=(2, 10, 4))
    np.testing.assert_allclose(G2.multiply(x, y), G.multiply(x, y))


def test_bad_grading_rejected():
    with pytest.raises(GradingViolation):
        build_group([2, 1], [(0, 1, 1, 1)])


def test_first_layer_must_generate():
    with pytest.raises(GradingViolation):
        build_group([2, 1])


def test_jacobi_violation_rejected():
    # [X1,X2]=X3, [X1,X3]=X4, [X2,X3]=X4 in a layer layout that breaks Jacobi
    with pytest.raises((JacobiViolation, GradingViolation)):
        build_group([3, 1, 1], [(0, 1, 3, 1), (0, 3, 4, 1), (1, 2, 3, 1), (2, 3, 4, 1)])


def test_step_four_unsupported():
    with pytest.raises(StepUnsupported):
        build_group([2, 1, 1, 1], [(0, 1, 2, 1), (0, 2, 3, 1), (0, 3, 4, 1)])


def test_unknown_builtin():
    with pytest.raises(UnknownName):
        builtin("nilpotent(7)")


@pytest.mark.parametrize("name", ["heisenberg1", "heisenberg_1", "Heisenberg(1)"])
def test_builtin_spellings(name):
    assert builtin(name) == builtin("heisenberg(1)")


def test_bad_definition_rejected():
    with pytest.raises(DimensionMismatch):
        group_from_json('{"brackets": []}')
    with pytest.raises(DimensionMismatch):
        build_group([])
