import math

import numpy as np
import pytest

from exceptions import ConstraintError, ValidationError
from geometry.profiles import (
    CaseTag,
    General,
    Normalized,
    Rectangle,
    SingularNormalized,
    build_family,
    classify_case,
    classify_geometry,
    eval_profiles,
    first_integral,
    is_singular_point,
    make_profiles,
    singular_points,
)

SQRT6 = math.sqrt(6.0)


@pytest.mark.parametrize("c, tag", [
    (3.0, CaseTag.POS_C),
    (-16.0 / 25.0, CaseTag.MID_C),
    (-1.0, CaseTag.NEG_ONE),
    (-5.0, CaseTag.LOW_C),
])
def test_classify_case(c, tag):
    assert classify_case(c) is tag


def test_classify_case_rejects_degenerate_and_non_finite():
    with pytest.raises(ValidationError, match="degenerate transform"):
        classify_case(0.0)
    with pytest.raises(ValidationError):
        classify_case(float("nan"))


def test_build_family_example_relation_is_exact(bubbles_inside):
    assert bubbles_inside.case is CaseTag.POS_C
    assert bubbles_inside.general == General(2.0, 0.0, 0.0, 1.0)
    assert abs(bubbles_inside.constraint_residual) < 1e-12


def test_build_family_cmc(cmc_family):
    assert cmc_family.is_cmc
    assert cmc_family.constraint_residual == 0.0


def test_build_family_reports_constraint_residual():
    with pytest.raises(ConstraintError) as info:
        build_family(4.0 * SQRT6, 3.0, Normalized(A1=4.0, B1=1.1))
    assert info.value.residual == pytest.approx(0.4, abs=1e-12)


def test_build_family_audit_mode_keeps_violation(perturbed_family):
    assert perturbed_family.constraint_residual == pytest.approx(0.4, abs=1e-12)


@pytest.mark.parametrize("c, coeffs", [
    (3.0, Normalized(A1=4.0, B1=0.0)),
    (-16.0 / 25.0, Normalized(A1=-1.0, B1=1.0)),
    (-5.0, Normalized(A1=0.0, B1=0.25)),
    (-1.0, Normalized(A1=0.0, a2=0.0, b2=1.0)),
])
def test_build_family_positivity(c, coeffs):
    with pytest.raises(ValidationError, match="positivity"):
        build_family(1.0, c, coeffs)


def test_build_family_rejects_non_finite_b():
    with pytest.raises(ValidationError):
        build_family(float("inf"), 3.0, Normalized(A1=4.0, B1=1.0))


def test_singular_normalization_forces_b():
    params = build_family(7.0, 3.0, SingularNormalized(1))
    assert params.b == -1.0
    assert params.coeffs == SingularNormalized(-1)
    assert params.is_singular


def test_eval_profiles_example_values(bubbles_inside_pair):
    v = eval_profiles(bubbles_inside_pair, 0.0, 0.0)
    assert float(v.f) == pytest.approx(2.0 - 4.0 * SQRT6 / 3.0, abs=1e-12)
    assert float(v.f1) == 0.0
    assert float(v.g) == pytest.approx(SQRT6, abs=1e-12)
    assert float(v.g1) == pytest.approx(2.0, abs=1e-12)


def test_eval_profiles_singular_pos(singular_pos):
    v = eval_profiles(make_profiles(singular_pos), 0.0, 0.0)
    assert float(v.f) == pytest.approx(2.0 / 3.0, abs=1e-15)


def test_vertical_bubbles_profiles(vertical_bubbles):
    pair = make_profiles(vertical_bubbles)
    u1 = np.linspace(-3, 3, 7)
    u2 = np.linspace(-2, 2, 7)
    v = pair.evaluate(u1, u2)
    np.testing.assert_allclose(v.f, np.sin(u1) + 2.0, atol=1e-14)
    np.testing.assert_allclose(v.g, u2 ** 2 - 0.75, atol=1e-14)
    assert abs(vertical_bubbles.constraint_residual) < 1e-12


@pytest.mark.parametrize("b, c, coeffs", [
    (4.0 * SQRT6, 3.0, Normalized(A1=4.0, B1=1.0)),
    (12.0 * math.sqrt(73.0) / 125.0, -16.0 / 25.0, Normalized(A1=4.0, B1=1.0)),
    (4.0 * math.sqrt(5.0) / 3.0, -5.0, Normalized(A1=1.0 / 9.0, B1=0.25)),
    (2.0, -1.0, Normalized(A1=1.0, a2=0.0, b2=-0.75)),
    (0.0, -5.0, SingularNormalized(1)),
    (0.0, -16.0 / 25.0, SingularNormalized(-1)),
])
def test_odes_and_first_integral(b, c, coeffs):
    params = build_family(b, c, coeffs)
    pair = make_profiles(params)
    rng = np.random.default_rng(7)
    u1, u2 = rng.uniform(-10, 10, 500), rng.uniform(-10, 10, 500)
    v = pair.evaluate(u1, u2)
    assert np.all(np.abs(v.f2 - params.c * v.f - params.b) <= 1e-9 * (1 + np.abs(v.f2)))
    assert np.all(np.abs(v.g2 + (1 + params.c) * v.g - params.b) <= 1e-9 * (1 + np.abs(v.g2)))
    E = first_integral(pair, u1, u2)
    scale = np.maximum.reduce([np.ones_like(u1), v.f1 ** 2, np.abs(params.c) * v.f ** 2, v.g1 ** 2,
                               np.abs(1 + params.c) * v.g ** 2])
    assert np.max(np.abs(E) / scale) <= 1e-9


def test_first_integral_of_perturbed_family_is_constant(perturbed_family):
    pair = make_profiles(perturbed_family)
    for u1, u2 in [(0.0, 0.0), (0.3, 0.7), (-1.0, 2.5)]:
        assert float(first_integral(pair, u1, u2)) == pytest.approx(0.4, abs=1e-9)


def test_periodicity():
    params = build_family(12.0 * math.sqrt(73.0) / 125.0, -16.0 / 25.0, Normalized(A1=4.0, B1=1.0))
    pair = make_profiles(params)
    u = np.linspace(-3, 3, 13)
    v0 = pair.evaluate(u, u)
    v1 = pair.evaluate(u + params.u1_period, u + params.u2_period)
    np.testing.assert_allclose(v1.f, v0.f, atol=1e-12)
    np.testing.assert_allclose(v1.g, v0.g, atol=1e-12)


def test_singular_points_pos(singular_pos):
    points = singular_points(singular_pos, Rectangle(-1.0, 1.0, 0.0, 2.0 * math.pi))
    assert len(points) == 2
    assert points[0] == pytest.approx((0.0, math.pi / 4), abs=1e-12)
    assert points[1] == pytest.approx((0.0, 5 * math.pi / 4), abs=1e-12)


def test_singular_points_low():
    params = build_family(1.0, -5.0, SingularNormalized(1))
    points = singular_points(params, Rectangle(0.0, 2.0 * math.pi, -1.0, 1.0))
    root5 = math.sqrt(5.0)
    assert len(points) == 2
    assert points[0] == pytest.approx((math.pi / (2 * root5), 0.0), abs=1e-12)
    assert points[1] == pytest.approx((5 * math.pi / (2 * root5), 0.0), abs=1e-12)


@pytest.mark.parametrize("c, epsilon1", [(-16.0 / 25.0, 1), (-16.0 / 25.0, -1), (-1.0, 1), (-1.0, -1)])
def test_singular_points_are_zeros_of_M(c, epsilon1):
    params = build_family(0.0, c, SingularNormalized(epsilon1))
    pair = make_profiles(params)
    points = singular_points(params, Rectangle(-8.0, 8.0, -8.0, 8.0))
    assert points
    for u1, u2 in points:
        v = pair.evaluate(u1, u2)
        M = 2 * params.b + params.c * (v.f - v.g)
        assert abs(float(M)) <= 1e-12
        assert is_singular_point(pair, u1, u2)


def test_singular_points_empty_for_regular_family(bubbles_inside):
    assert singular_points(bubbles_inside, Rectangle(-5, 5, -5, 5)) == []


def test_classify_geometry_bubbles(bubbles_inside):
    record = classify_geometry(bubbles_inside)
    assert record.one_plus_c_ratio == (2, 1)
    assert record.n_bubbles == 2
    assert record.placement == "inside"
    assert not record.planar_ends
    assert record.closes_in_u2


def test_classify_geometry_outside_and_nested():
    outside = classify_geometry(build_family(-4.0 * SQRT6, 3.0, Normalized(A1=4.0, B1=1.0)))
    assert outside.placement == "outside"
    assert outside.n_bubbles == 2
    nested = classify_geometry(build_family(12.0 * math.sqrt(73.0) / 125.0, -16.0 / 25.0, Normalized(A1=4.0, B1=1.0)))
    assert nested.minus_c_ratio == (4, 5)
    assert nested.one_plus_c_ratio == (3, 5)
    assert nested.placement == "nested"


def test_classify_geometry_planar_ends(singular_pos):
    record = classify_geometry(singular_pos)
    assert record.planar_ends
    assert record.to_dict()["case"] == "PosC"


def test_rectangle_validation():
    with pytest.raises(ValidationError):
        Rectangle(1.0, 0.0, 0.0, 1.0)
    assert Rectangle(0.0, 1.0, 0.0, 2.0).center == (0.5, 1.0)
