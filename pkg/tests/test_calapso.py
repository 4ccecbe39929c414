import math

import numpy as np
import pytest

from exceptions import MaskedRegionError, ValidationError
from geometry.calapso import (
    FieldKind,
    calapso_residual,
    convergence_study,
    custom_field,
    field_from_surface,
    make_field,
    residual_convergence_order,
    select_patch,
)
from geometry.catalog import get_family
from geometry.profiles import Normalized, Rectangle, build_family, make_profiles
from geometry.surface import surface_fields

SQRT2 = math.sqrt(2.0)
SQRT6 = math.sqrt(6.0)
STEPS = (0.04, 0.02, 0.01)


def test_make_field_values(bubbles_inside):
    omega = make_field(bubbles_inside, FieldKind.OMEGA)
    assert omega.epsilon == 1
    assert float(omega(0.0, 0.0)) == pytest.approx(SQRT2 * (7 * SQRT6 + 6) / (12 + 2 * SQRT6), rel=1e-12)
    assert float(omega(0.0, 0.0)) == pytest.approx(1.9370, abs=1e-4)
    capital = make_field(bubbles_inside, "capital_omega")
    assert float(capital(0.0, 0.0)) == pytest.approx(-4.4398, abs=1e-4)


def test_make_field_vertical_bubbles(vertical_bubbles):
    omega = make_field(vertical_bubbles, FieldKind.OMEGA)
    assert omega.epsilon == -1
    assert float(omega(0.0, 0.0)) == pytest.approx(-1.1 * SQRT2, rel=1e-12)
    u1, u2 = 0.4, -0.3
    printed = -SQRT2 * (-11 + 4 * u2 ** 2 + 4 * math.sin(u1)) / (-10 - 8 * u2 ** 2 + 8 * math.sin(u1))
    assert float(omega(u1, u2)) == pytest.approx(printed, rel=1e-12)


def test_make_field_rejects_custom(bubbles_inside):
    with pytest.raises(ValidationError):
        make_field(bubbles_inside, FieldKind.CUSTOM)


def test_constant_field_residual_is_zero():
    field = custom_field(lambda u1, u2: np.full_like(u1, 1.7), "const")
    report = calapso_residual(field, Rectangle(0.0, 1.0, 0.0, 1.0), 0.1)
    assert report.max_abs == 0.0
    assert report.l2 == 0.0
    assert report.residual_grid.shape == (11, 11)


def test_linear_field_residual_is_zero():
    field = custom_field(lambda u1, u2: u1 + 0 * u2, "u1")
    report = calapso_residual(field, Rectangle(1.0, 2.0, 1.0, 2.0), 0.05)
    assert report.max_abs <= 1e-12
    assert residual_convergence_order(field, Rectangle(1.0, 2.0, 1.0, 2.0), STEPS) == math.inf


def test_omega_converges_at_second_order(bubbles_inside):
    omega = make_field(bubbles_inside, FieldKind.OMEGA)
    study = convergence_study(omega, Rectangle(0.5, 1.5, 0.5, 1.5), (0.02, 0.01, 0.005))
    assert 1.7 <= study.order <= 2.3
    assert study.reports[0].max_abs > study.reports[-1].max_abs
    assert residual_convergence_order(omega, Rectangle(0.5, 1.5, 0.5, 1.5), STEPS) == pytest.approx(2.0, abs=0.3)


def test_nested_family_omega_order():
    params = get_family("nested-bubbles").build()
    omega = make_field(params, FieldKind.OMEGA)
    assert 1.7 <= residual_convergence_order(omega, Rectangle(3.0, 4.0, 3.0, 4.0), STEPS) <= 2.3


@pytest.mark.parametrize("name", [
    "bubbles-inside", "bubbles-outside", "nested-bubbles", "low-c-outside", "low-c-inside",
    "vertical-bubbles", "planar-ends-pos", "planar-ends-mid", "planar-ends-low", "planar-ends-neg-one",
])
def test_catalog_fields_solve_the_equation(name):
    entry = get_family(name)
    params = entry.build()
    omega = make_field(params, FieldKind.OMEGA)
    capital = make_field(params, FieldKind.CAPITAL_OMEGA).scaled(0.5)
    assert 1.7 <= residual_convergence_order(omega, entry.omega_patch, STEPS) <= 2.3
    assert 1.7 <= residual_convergence_order(capital, entry.capital_omega_patch, STEPS) <= 2.3


def test_scaled_and_perturbed_fields_do_not_converge(bubbles_inside):
    omega = make_field(bubbles_inside, FieldKind.OMEGA)
    patch = Rectangle(0.5, 1.5, 0.5, 1.5)
    assert residual_convergence_order(omega.scaled(2.0), patch, STEPS) <= 0.5
    wrong = custom_field(lambda u1, u2: omega(u1, u2) + 0.1 * u1 * u2, "wrong")
    assert residual_convergence_order(wrong, patch, STEPS) <= 0.5


def test_sign_invariance_is_bitwise(bubbles_inside):
    omega = make_field(bubbles_inside, FieldKind.OMEGA)
    patch = Rectangle(0.5, 1.5, 0.5, 1.5)
    plus = calapso_residual(omega, patch, 0.02).residual_grid
    minus = calapso_residual(omega.negated(), patch, 0.02).residual_grid
    assert np.array_equal(plus, minus)


def test_field_from_surface_matches_closed_forms(bubbles_inside, bubbles_inside_pair):
    mean = field_from_surface(bubbles_inside, bubbles_inside_pair, "mean")
    skew = field_from_surface(bubbles_inside, bubbles_inside_pair, "skew")
    omega = make_field(bubbles_inside, FieldKind.OMEGA)
    capital = make_field(bubbles_inside, FieldKind.CAPITAL_OMEGA)
    assert float(mean(0.0, 0.0)) == pytest.approx(-float(omega(0.0, 0.0)), rel=1e-12)
    assert float(skew(0.0, 0.0)) == pytest.approx(float(capital(0.0, 0.0)), rel=1e-12)
    u1, u2 = np.meshgrid(np.linspace(-1, 1, 9), np.linspace(0, 3, 9), indexing="ij")
    np.testing.assert_allclose(np.abs(mean(u1, u2)), np.abs(omega(u1, u2)), rtol=1e-12)


def test_cmc_mean_field_is_a_solution(cmc_family):
    pair = make_profiles(cmc_family)
    mean = field_from_surface(cmc_family, pair, "mean")
    u = np.linspace(0.2, 0.8, 5)
    psi = surface_fields(cmc_family, pair, u, u).psi
    np.testing.assert_allclose(mean(u, u), -SQRT2 * psi / 2, rtol=1e-14)
    assert 1.7 <= residual_convergence_order(mean, Rectangle(0.3, 0.8, 0.3, 0.8), STEPS) <= 2.3


def test_residual_rejects_masked_patch(singular_pos):
    omega = make_field(singular_pos, FieldKind.OMEGA)
    with pytest.raises(MaskedRegionError, match="masked point"):
        calapso_residual(omega, Rectangle(-0.2, 0.2, math.pi / 4 - 0.2, math.pi / 4 + 0.2), 0.01)


def test_residual_rejects_vanishing_field():
    field = custom_field(lambda u1, u2: u1 - 0.5, "shifted")
    with pytest.raises(MaskedRegionError, match="vanishes"):
        calapso_residual(field, Rectangle(0.0, 1.0, 0.0, 1.0), 0.1)


def test_convergence_study_validates_steps(bubbles_inside):
    omega = make_field(bubbles_inside, FieldKind.OMEGA)
    with pytest.raises(ValidationError):
        convergence_study(omega, Rectangle(0.5, 1.5, 0.5, 1.5), (0.02, 0.01))
    with pytest.raises(ValidationError):
        convergence_study(omega, Rectangle(0.5, 1.5, 0.5, 1.5), (0.01, 0.02, 0.04))


def test_select_patch_gives_admissible_patch(singular_pos):
    omega = make_field(singular_pos, FieldKind.OMEGA)
    window = Rectangle(-2.0, 2.0, 0.0, 2.0 * math.pi)
    patch = select_patch(omega, window)
    assert window.contains(patch.u1_min, patch.u2_min) and window.contains(patch.u1_max, patch.u2_max)
    assert patch.u1_max - patch.u1_min == pytest.approx(0.5)
    report = calapso_residual(omega, patch, 0.04)
    assert np.isfinite(report.max_abs)


def test_roundoff_estimate_grows_as_the_step_shrinks(bubbles_inside):
    omega = make_field(bubbles_inside, FieldKind.OMEGA)
    study = convergence_study(omega, Rectangle(0.5, 1.5, 0.5, 1.5), STEPS)
    roundoff = [r.roundoff for r in study.reports]
    assert 0 < roundoff[0] < roundoff[1] < roundoff[2]
    assert study.reports[0].resolved
    assert study.to_dict()["fitted_steps"] == study.fitted_steps >= 2


def test_auto_selected_patch_fits_order_above_rounding_noise():
    params = build_family(4.0 * math.sqrt(5.0) / 3.0, -5.0, Normalized(A1=1.0 / 9.0, B1=0.25))
    omega = make_field(params, FieldKind.OMEGA)
    patch = select_patch(omega, Rectangle(-2.0, 2.0, 0.0, 2.0 * math.pi))
    study = convergence_study(omega, patch, STEPS)
    assert study.solves((1.7, 2.3)), study.to_dict()
