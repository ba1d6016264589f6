import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pressure_lab.cones import (
    Cone,
    HyperbolicClassSpec,
    almost_mult_constant,
    block_diag_cone_check,
    boundary_directions,
    cone_constant,
    cone_contains,
    cone_contraction_check,
    conformal_check,
    hyperbolic_sv_check,
    in_hyperbolic_class,
    maps_cone_into,
    restricted_norm,
    wedge_eigen_check,
)
from pressure_lab.errors import ValidationError
from pressure_lab.verify import ORTHANT_CONES, positive_pairs, random_block_diagonal, random_contraction_case


def test_cone_contains_basics():
    c = Cone([1.0, 0.0], 0.5)  # half-angle 60 degrees
    assert cone_contains(c, [1.0, 0.0])
    assert cone_contains(c, [0.0, 0.0])
    assert cone_contains(c, [math.cos(math.radians(59)), math.sin(math.radians(59))])
    assert not cone_contains(c, [math.cos(math.radians(61)), math.sin(math.radians(61))])
    assert not cone_contains(c, [-1.0, 0.0])
    assert cone_contains(c, [-1.0, 0.0], symmetric=True)
    with pytest.raises(ValidationError):
        cone_contains(c, [1.0, 0.0, 0.0])


def test_cone_validation():
    with pytest.raises(ValidationError):
        Cone([0.0, 0.0], 0.5)
    with pytest.raises(ValidationError):
        Cone([1.0, 0.0], 1.0)


@pytest.mark.parametrize("dim", [2, 3, 5])
def test_boundary_directions_lie_on_cone(dim, rng):
    c = Cone(rng.normal(size=dim), 0.3)
    dirs = boundary_directions(c, 1000)
    assert dirs.shape == (1001, dim)
    np.testing.assert_allclose(np.linalg.norm(dirs, axis=1), 1.0, atol=1e-12)
    cos = dirs @ c.axis
    assert cos[0] == pytest.approx(1.0)
    assert np.all(cos >= 1 - c.aperture - 1e-12)
    if dim > 2:
        np.testing.assert_allclose(cos[1:], 1 - c.aperture, atol=1e-12)
    np.testing.assert_array_equal(dirs, boundary_directions(c, 1000))


def test_maps_cone_into_identity_and_rotation():
    k1 = Cone([1.0, 0.0], 0.2)
    k2 = Cone([1.0, 0.0], 0.5)
    assert maps_cone_into(np.eye(2), k1, k2).holds
    assert not maps_cone_into(np.eye(2), k2, k1).holds
    rot = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert not maps_cone_into(rot, k1, k2).holds
    assert maps_cone_into(-np.eye(2), k1, k2).holds  # symmetric target by default
    assert not maps_cone_into(-np.eye(2), k1, k2, symmetric=False).holds
    with pytest.raises(ValidationError):
        maps_cone_into(np.eye(2), k1, k2, samples=10)


def test_contraction_lemma_on_random_cases():
    rng = np.random.default_rng(5)
    for _ in range(20):
        a, v, lam = random_contraction_case(rng)
        rep = cone_contraction_check(a, v, lam)
        assert rep.hypothesis and rep.holds
        assert rep.restricted_norm == pytest.approx(restricted_norm(a, v))


def test_contraction_check_rejects_bad_input():
    with pytest.raises(ValidationError):
        cone_contraction_check(np.eye(2), [1.0, 1.0], lam=2.0)
    with pytest.raises(ValidationError):
        cone_contraction_check(-np.eye(2), [1.0, 0.0])
    rep = cone_contraction_check(np.diag([1.0, 0.5]), [1.0, 0.0])
    assert not rep.hypothesis and not rep.holds and rep.certificate is None


def test_cone_constant_geometry():
    k1, k2 = ORTHANT_CONES
    c = cone_constant(k1, k2)
    expected = (math.sin(math.radians(46 - 25)) * math.cos(math.radians(25))) ** 2
    assert c == pytest.approx(expected, rel=1e-12)
    assert cone_constant(k2, k1) == 0.0


def test_almost_mult_inequality_holds():
    rng = np.random.default_rng(9)
    k1, k2 = ORTHANT_CONES
    pairs = positive_pairs(rng, 200, k1, k2)
    c_emp = almost_mult_constant(pairs, k1, k2)
    assert c_emp >= cone_constant(k1, k2) > 0
    with pytest.raises(ValidationError):
        almost_mult_constant([(np.eye(2), np.array([[0.0, -1.0], [1.0, 0.0]]))], k1, k2)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_almost_mult_constant_is_a_lower_bound(seed):
    rng = np.random.default_rng(seed)
    k1, k2 = ORTHANT_CONES
    (a, b), = positive_pairs(rng, 1, k1, k2)
    lhs = np.linalg.norm(a @ b, 2)
    assert lhs >= cone_constant(k1, k2) * np.linalg.norm(a, 2) * np.linalg.norm(b, 2)


def test_hyperbolic_class_and_checks():
    rng = np.random.default_rng(2)
    for _ in range(5):
        spec, h = random_block_diagonal(rng)
        assert in_hyperbolic_class(h, spec)
        assert hyperbolic_sv_check(h, spec).holds
        for r in range(1, len(spec.blocks) + 1):
            rep = wedge_eigen_check(h, spec, r)
            assert rep.holds
            assert rep.eigenvalue == pytest.approx(rep.block_det_product, rel=1e-10)
        assert block_diag_cone_check(h, spec, samples=1000).holds


def test_hyperbolic_spec_validation():
    with pytest.raises(ValidationError):
        HyperbolicClassSpec(((1, 0.0), (1, 0.01)), 0.1)
    spec = HyperbolicClassSpec(((1, 1.0), (2, 0.0)), 0.01)
    assert spec.d == 3 and spec.cumulative == [1, 3]
    with pytest.raises(ValidationError):
        in_hyperbolic_class(np.ones((3, 3)), spec)
    h = np.diag([math.e, 1.0, 1.5])
    rep = hyperbolic_sv_check(h, spec)
    assert not rep.holds and rep.offending == [1]


def test_conformal_check():
    assert conformal_check(2.0 * np.eye(2), math.log(2), 0.0)
    assert not conformal_check(np.diag([2.0, 1.0]), math.log(2), 0.1)
