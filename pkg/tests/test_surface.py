import math

import numpy as np
import pytest

from exceptions import MaskedRegionError
from geometry.profiles import make_profiles
from geometry.surface import (
    NEAR_SINGULAR,
    cylinder_frame,
    eval_surface_point,
    eval_via_general_ribaucour,
    flag_label,
    surface_fields,
)

SQRT6 = math.sqrt(6.0)


def test_cylinder_frame_examples():
    frame = cylinder_frame(0.0, 0.0)
    np.testing.assert_allclose(frame.X, [1, 0, 0])
    np.testing.assert_allclose(frame.N, [-1, 0, 0])
    frame = cylinder_frame(0.0, math.pi / 2)
    np.testing.assert_allclose(frame.X, [0, 1, 0], atol=1e-15)
    np.testing.assert_allclose(frame.X2, [-1, 0, 0], atol=1e-15)
    frame = cylinder_frame(5.0, math.pi)
    np.testing.assert_allclose(frame.X, [-1, 0, 5], atol=1e-15)
    np.testing.assert_allclose(frame.N, [1, 0, 0], atol=1e-15)


def test_cylinder_frame_is_orthonormal():
    u1, u2 = np.meshgrid(np.linspace(-3, 3, 7), np.linspace(0, 6, 7), indexing="ij")
    f = cylinder_frame(u1, u2)
    for a in (f.X1, f.X2, f.N):
        np.testing.assert_allclose(np.linalg.norm(a, axis=-1), 1.0, atol=1e-15)
    np.testing.assert_allclose(np.sum(f.X1 * f.X2, axis=-1), 0.0, atol=1e-15)
    np.testing.assert_allclose(np.sum(f.X2 * f.N, axis=-1), 0.0, atol=1e-15)


def test_example_point_values(bubbles_inside, bubbles_inside_pair):
    p = eval_surface_point(bubbles_inside, bubbles_inside_pair, 0.0, 0.0)
    assert p.ok
    assert p.M == pytest.approx(6 + SQRT6, rel=1e-12)
    np.testing.assert_allclose(p.position, [1 - 2 * SQRT6 / (6 + SQRT6), -4 / (6 + SQRT6), 0.0], atol=1e-12)
    assert p.psi == pytest.approx((6 - SQRT6) / (6 + SQRT6), rel=1e-12)
    assert p.H == pytest.approx(-(13 + 8 * SQRT6) / 10, rel=1e-12)
    lambda1 = -12 * SQRT6 / (3 * (2 - SQRT6 / 3) ** 2)
    assert p.lambda1 == pytest.approx(lambda1, rel=1e-12)
    assert p.lambda2 == pytest.approx(-(13 + 8 * SQRT6) / 5 - lambda1, rel=1e-12)
    assert 0.5 * (p.lambda1 + p.lambda2) == pytest.approx(p.H, rel=1e-12)
    assert p.Hskew == pytest.approx(p.lambda1 - p.lambda2, rel=1e-12)
    assert p.K == p.lambda1 * p.lambda2
    assert np.linalg.norm(p.normal) == pytest.approx(1.0, abs=1e-12)


def test_cmc_family_has_constant_mean_curvature(cmc_family):
    pair = make_profiles(cmc_family)
    rng = np.random.default_rng(3)
    fields = surface_fields(cmc_family, pair, rng.uniform(-3, 3, 200), rng.uniform(-3, 3, 200))
    assert np.all(fields.H[fields.ok] == -0.5)


def test_general_ribaucour_agrees(bubbles_inside, bubbles_inside_pair):
    position, l1, l2, inter = eval_via_general_ribaucour(bubbles_inside, bubbles_inside_pair, 0.0, 0.0)
    assert float(inter.S) == pytest.approx(10.0, rel=1e-12)
    assert float(inter.Omega * (2 * bubbles_inside.b + 3 * (inter.Omega - 2 * inter.W))) == pytest.approx(10.0, rel=1e-12)
    p = eval_surface_point(bubbles_inside, bubbles_inside_pair, 0.0, 0.0)
    np.testing.assert_allclose(position, p.position, atol=1e-12)
    assert float(l1) == pytest.approx(p.lambda1, rel=1e-12)
    assert float(l2) == pytest.approx(p.lambda2, rel=1e-12)


def test_general_ribaucour_curvatures_cmc(cmc_family):
    pair = make_profiles(cmc_family)
    _, l1, l2, _ = eval_via_general_ribaucour(cmc_family, pair, 0.3, 0.7)
    p = eval_surface_point(cmc_family, pair, 0.3, 0.7)
    assert float(l1) == pytest.approx(p.lambda1, rel=1e-10)
    assert float(l2) == pytest.approx(p.lambda2, rel=1e-10)


def test_normal_is_orthogonal_to_tangents(bubbles_inside, bubbles_inside_pair):
    h = 1e-5
    u1, u2 = 0.4, 1.1
    p = eval_surface_point(bubbles_inside, bubbles_inside_pair, u1, u2)
    d1 = (eval_surface_point(bubbles_inside, bubbles_inside_pair, u1 + h, u2).position
          - eval_surface_point(bubbles_inside, bubbles_inside_pair, u1 - h, u2).position) / (2 * h)
    d2 = (eval_surface_point(bubbles_inside, bubbles_inside_pair, u1, u2 + h).position
          - eval_surface_point(bubbles_inside, bubbles_inside_pair, u1, u2 - h).position) / (2 * h)
    assert abs(p.normal @ d1) <= 1e-7 * np.linalg.norm(d1)
    assert abs(p.normal @ d2) <= 1e-7 * np.linalg.norm(d2)


def test_masked_point(singular_pos):
    pair = make_profiles(singular_pos)
    p = eval_surface_point(singular_pos, pair, 0.0, math.pi / 4)
    assert p.flags & NEAR_SINGULAR
    assert flag_label(p.flags) == "near_singular"
    assert math.isnan(p.psi)
    assert np.all(np.isnan(p.position))
    with pytest.raises(MaskedRegionError, match="near_singular"):
        p.require_ok()


def test_flag_labels():
    assert flag_label(0) == "ok"
    assert flag_label(3) == "near_domain_boundary|near_singular"
