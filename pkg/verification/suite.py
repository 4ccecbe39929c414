"""
Full audit of a family: identities, finite-difference geometry, Calapso residuals,
length probes and bubble counts.
"""
import math
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from config import config
from exceptions import RibaucourError
from geometry.calapso import (
    CalapsoField,
    FieldKind,
    calapso_residual,
    convergence_study,
    custom_field,
    field_from_surface,
    make_field,
    select_patch,
)
from geometry.catalog import FamilyEntry
from geometry.profiles import CaseTag, FamilyParams, ProfilePair, Rectangle, classify_geometry, singular_points
from geometry.surface import surface_evaluator, surface_fields
from logger import logger
from verification.identities import identity_suite, quasi_random_points
from verification.oracle import count_bubbles, fd_first_fundamental, fd_shape_operator, length_probe


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: Optional[float] = None
    tolerance: Optional[object] = None
    gating: bool = True
    detail: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "passed": self.passed,
            "value": self.value,
            "tolerance": self.tolerance,
            "gating": self.gating,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class VerifyReport:
    family: Dict[str, object]
    classification: Dict[str, object]
    checks: List[CheckResult]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks if c.gating)

    @property
    def first_failure(self) -> Optional[str]:
        return next((c.name for c in self.checks if c.gating and not c.passed), None)

    def check(self, name: str) -> CheckResult:
        return next(c for c in self.checks if c.name == name)

    def to_dict(self) -> Dict[str, object]:
        return {
            "family": self.family,
            "classification": self.classification,
            "passed": self.passed,
            "first_failure": self.first_failure,
            "checks": [c.to_dict() for c in self.checks],
        }


def _guarded(name: str, run: Callable[[], List[CheckResult]], gating: bool = True) -> List[CheckResult]:
    try:
        return run()
    except RibaucourError as e:
        logger.error(f"Check {name} could not run: {e}")
        return [CheckResult(name=name, passed=False, gating=gating, detail={"error": str(e)})]


# ----------------------------
# Identity suite
# ----------------------------
def _identity_checks(params: FamilyParams, pair: ProfilePair) -> List[CheckResult]:
    report = identity_suite(params, pair)
    return [
        CheckResult(
            name=f"identity.{c.name}",
            passed=c.passed,
            value=c.max_error,
            tolerance=c.tolerance,
            detail={"worst_point": list(c.worst_point) if c.worst_point else None, "count": c.count},
        )
        for c in report.checks
    ]


# ----------------------------
# Finite-difference geometry
# ----------------------------
def _fd_points(params: FamilyParams, pair: ProfilePair, window: Rectangle) -> np.ndarray:
    """
    FD_POINTS well-conditioned unmasked points of the window, in Halton order.

    Kept points have |M| and |f+g| above FD_CONDITION_FLOOR, lie at least FD_MIN_SCALE
    from the zero sets of M and f+g (estimated as |M|/|grad M| and |f+g|/|grad(f+g)|),
    and have a metric factor inside FD_PSI_RANGE.
    """
    box = (window.u1_min, window.u1_max, window.u2_min, window.u2_max)
    candidates = quasi_random_points(config.FD_CANDIDATES * config.FD_POINTS, box)
    u1, u2 = candidates[:, 0], candidates[:, 1]
    fields = surface_fields(params, pair, u1, u2)
    v = pair.evaluate(u1, u2)
    floor = config.FD_CONDITION_FLOOR
    grad_M = abs(params.c) * np.hypot(v.f1, v.g1)
    grad_s = np.hypot(v.f1, v.g1)
    tiny = np.finfo(float).tiny
    scale = np.minimum(np.abs(fields.M) / np.maximum(grad_M, tiny), np.abs(fields.fg_sum) / np.maximum(grad_s, tiny))
    lo, hi = config.FD_PSI_RANGE
    with np.errstate(invalid="ignore"):
        keep = (fields.ok & (np.abs(fields.M) >= floor) & (np.abs(fields.fg_sum) >= floor)
                & (scale >= config.FD_MIN_SCALE) & (fields.psi >= lo) & (fields.psi <= hi))
    points = candidates[keep][:config.FD_POINTS]
    if len(points) < config.FD_POINTS:
        logger.warning(f"Only {len(points)} well-conditioned finite-difference points in {window.to_dict()}")
    return points


def _ratio(err_h: float, err_half: float) -> Optional[float]:
    if err_h < config.FD_RATIO_FLOOR or err_half == 0:
        return None
    return err_h / err_half


def _ratio_ok(ratio: Optional[float]) -> bool:
    lo, hi = config.FD_RATIO_BAND
    return ratio is None or lo <= ratio <= hi


def _conformality_checks(params: FamilyParams, pair: ProfilePair, window: Rectangle) -> List[CheckResult]:
    evaluator = surface_evaluator(params, pair)
    h = config.FD_STEP
    points = _fd_points(params, pair, window)
    if len(points) == 0:
        return [CheckResult(name="fd.conformal", passed=False, detail={"error": "no well-conditioned points in window"})]
    psi = surface_fields(params, pair, points[:, 0], points[:, 1]).psi

    def errors(u, step, psi_u):
        forms = fd_first_fundamental(evaluator, u, step)
        return (abs(forms.E - forms.G) / max(forms.E, forms.G),
                abs(forms.F) / forms.E,
                abs(forms.E - psi_u * psi_u) / (psi_u * psi_u))

    table = np.array([errors(tuple(p), h, s) for p, s in zip(points, psi)])
    results = []
    for column, name in enumerate(("fd.conformal", "fd.orthogonal", "fd.metric_factor")):
        k = int(np.argmax(table[:, column]))
        worst = tuple(points[k])
        ratio = _ratio(table[k, column], errors(worst, 0.5 * h, psi[k])[column])
        value = float(table[k, column])
        results.append(CheckResult(
            name=name,
            passed=value <= config.FD_CONFORMAL_TOL and _ratio_ok(ratio),
            value=value,
            tolerance=config.FD_CONFORMAL_TOL,
            detail={"points": len(points), "worst_point": list(worst), "h": h, "halving_ratio": ratio},
        ))
    return results


def _shape_operator_checks(params: FamilyParams, pair: ProfilePair, window: Rectangle) -> List[CheckResult]:
    evaluator = surface_evaluator(params, pair)
    h = config.FD_STEP
    points = _fd_points(params, pair, window)
    fields = surface_fields(params, pair, points[:, 0], points[:, 1])
    moderate = np.maximum(np.abs(fields.lambda1), np.abs(fields.lambda2)) <= config.FD_MAX_CURVATURE
    points = points[moderate]
    l1, l2 = fields.lambda1[moderate], fields.lambda2[moderate]

    def errors(u, step, lam1, lam2):
        est = fd_shape_operator(evaluator, u, step)
        scale = max(1.0, abs(lam1), abs(lam2))
        return max(abs(est.k1 - lam1), abs(est.k2 - lam2)) / scale, abs(est.offdiag)

    table = np.array([errors(tuple(p), h, a, b) for p, a, b in zip(points, l1, l2)])
    if table.size == 0:
        return [CheckResult(name="fd.curvature", passed=False, detail={"error": "no moderate-curvature points in window"})]
    results = []
    for column, name, tol in ((0, "fd.curvature", config.FD_CURVATURE_TOL), (1, "fd.offdiag", config.FD_OFFDIAG_TOL)):
        k = int(np.argmax(table[:, column]))
        worst = tuple(points[k])
        ratio = _ratio(table[k, column], errors(worst, 0.5 * h, l1[k], l2[k])[column])
        value = float(table[k, column])
        results.append(CheckResult(
            name=name,
            passed=value <= tol and _ratio_ok(ratio),
            value=value,
            tolerance=tol,
            detail={"points": len(points), "worst_point": list(worst), "h": h, "halving_ratio": ratio},
        ))
    return results


# ----------------------------
# Calapso residuals
# ----------------------------
def _study_check(name: str, fld: CalapsoField, patch: Rectangle, expect_solution: bool = True,
                 gating: bool = True) -> CheckResult:
    study = convergence_study(fld, patch, config.CALAPSO_STEPS)
    if expect_solution:
        passed = study.solves(config.CALAPSO_ORDER_BAND)
        tolerance = list(config.CALAPSO_ORDER_BAND)
    else:
        passed = study.order <= config.CALAPSO_NEGATIVE_MAX_ORDER
        tolerance = config.CALAPSO_NEGATIVE_MAX_ORDER
    return CheckResult(name=name, passed=passed, value=study.order, tolerance=tolerance,
                       gating=gating, detail=study.to_dict())


def _pointwise_agreement(name: str, left: CalapsoField, right: CalapsoField, patch: Rectangle) -> CheckResult:
    u1 = np.linspace(patch.u1_min, patch.u1_max, 11)
    u2 = np.linspace(patch.u2_min, patch.u2_max, 11)
    U1, U2 = np.meshgrid(u1, u2, indexing="ij")
    a, b = np.abs(left(U1, U2)), np.abs(right(U1, U2))
    gap = float(np.max(np.abs(a - b) / np.maximum(1.0, b)))
    return CheckResult(name=name, passed=gap <= 1e-12, value=gap, tolerance=1e-12)


def calapso_patches(params: FamilyParams, entry: Optional[FamilyEntry],
                    window: Rectangle) -> Tuple[Rectangle, Rectangle]:
    if entry is not None:
        return entry.omega_patch, entry.capital_omega_patch
    omega = select_patch(make_field(params, FieldKind.OMEGA), window)
    capital = select_patch(make_field(params, FieldKind.CAPITAL_OMEGA).scaled(0.5), window)
    return omega, capital


def _calapso_checks(params: FamilyParams, pair: ProfilePair, omega_patch: Rectangle,
                    capital_patch: Rectangle) -> List[CheckResult]:
    omega = make_field(params, FieldKind.OMEGA)
    capital = make_field(params, FieldKind.CAPITAL_OMEGA)
    results = [
        _study_check("calapso.omega", omega, omega_patch),
        _study_check("calapso.capital_omega_solving", capital.scaled(0.5), capital_patch),
        _study_check("calapso.scaled_omega_control", omega.scaled(2.0), omega_patch, expect_solution=False),
    ]

    def perturbed(u1, u2):
        return omega(u1, u2) + 0.1 * u1 * u2

    results.append(_study_check("calapso.perturbed_omega_control", custom_field(perturbed, "omega+0.1*u1*u2"),
                                omega_patch, expect_solution=False))

    h = config.CALAPSO_STEPS[0]
    plus = calapso_residual(omega, omega_patch, h).residual_grid
    minus = calapso_residual(omega.negated(), omega_patch, h).residual_grid
    results.append(CheckResult(name="calapso.sign_invariance", passed=bool(np.array_equal(plus, minus)),
                               value=float(np.max(np.abs(plus - minus)))))

    results.append(_pointwise_agreement("calapso.mean_field_agreement",
                                        field_from_surface(params, pair, "mean"), omega, omega_patch))
    results.append(_pointwise_agreement("calapso.skew_field_agreement",
                                        field_from_surface(params, pair, "skew"), capital, capital_patch))

    # the printed normalisation of capital omega is recorded, not enforced
    printed = _study_check("calapso.capital_omega_printed", capital, capital_patch, gating=False)
    agreement = "agrees" if printed.passed else "disagrees"
    results.append(CheckResult(name=printed.name, passed=printed.passed, value=printed.value,
                               tolerance=printed.tolerance, gating=False,
                               detail={**printed.detail, "finding": f"printed normalisation {agreement}"}))
    return results


# ----------------------------
# Planar ends and bubbles
# ----------------------------
DEFAULT_PROBE_DIRECTIONS = {
    CaseTag.POS_C: (0.0, -1.0),
    CaseTag.MID_C: (1.0, 0.0),
    CaseTag.LOW_C: (0.0, 1.0),
    CaseTag.NEG_ONE: (0.0, 1.0),
}


def probe_target(params: FamilyParams, entry: Optional[FamilyEntry]) -> Tuple[Tuple[float, float], Tuple[float, float]]:
    if entry is not None and entry.probe_point is not None:
        return entry.probe_point, entry.probe_direction
    window = Rectangle(-2.0 * math.pi, 2.0 * math.pi, -2.0 * math.pi, 2.0 * math.pi)
    points = singular_points(params, window)
    if not points:
        raise RibaucourError("no singular point found for the length probe")
    p0 = min(points, key=lambda p: (math.hypot(*p), p))
    return p0, DEFAULT_PROBE_DIRECTIONS[params.case]


def _length_checks(params: FamilyParams, pair: ProfilePair, entry: Optional[FamilyEntry]) -> List[CheckResult]:
    p0, direction = probe_target(params, entry)
    probe = length_probe(params, pair, p0, direction)
    return [CheckResult(name="length_probe", passed=probe.passes(), value=probe.c_fit,
                        tolerance=config.LENGTH_PROBE_REL_TOL, detail=probe.to_dict())]


def bubble_window(params: FamilyParams) -> Rectangle:
    """u2 in [0, 2 pi m] when sqrt(1+c) = n/m closes the surface, otherwise one period of g."""
    classification = classify_geometry(params)
    if classification.closes_in_u2:
        width = 2.0 * math.pi * classification.one_plus_c_ratio[1]
    else:
        width = params.u2_period
    return Rectangle(config.DEFAULT_U1[0], config.DEFAULT_U1[1], 0.0, width)


def _bubble_checks(params: FamilyParams, pair: ProfilePair, entry: Optional[FamilyEntry]) -> List[CheckResult]:
    window = bubble_window(params)
    n1, n2 = config.BUBBLE_RES
    turns = max(1, int(round((window.u2_max - window.u2_min) / (2.0 * math.pi))))
    count = count_bubbles(params, pair, window, (n1, n2 * turns))

    expected = {"classification": classify_geometry(params).n_bubbles,
                "catalog": entry.bubbles if entry is not None else None}
    expected = {source: n for source, n in expected.items() if n is not None}
    # without a known bubble number the count is recorded only
    passed = all(count.n_max == n for n in expected.values())
    return [CheckResult(name="bubbles", passed=passed, value=float(count.n_max),
                        tolerance=expected or None, gating=bool(expected), detail=count.to_dict())]


def verify_family(params: FamilyParams, pair: ProfilePair, entry: Optional[FamilyEntry] = None,
                  window: Optional[Rectangle] = None) -> VerifyReport:
    """
    Run every audit on the family. Checks that raise are recorded as failures.

    Documented catalog patches are used when `entry` is given; otherwise Calapso
    patches are auto-selected inside the window.
    """
    window = window or Rectangle(config.DEFAULT_U1[0], config.DEFAULT_U1[1], config.DEFAULT_U2[0], config.DEFAULT_U2[1])
    classification = classify_geometry(params)

    checks: List[CheckResult] = []
    checks += _guarded("identity", lambda: _identity_checks(params, pair))

    def run_calapso():
        omega_patch, capital_patch = calapso_patches(params, entry, window)
        return _calapso_checks(params, pair, omega_patch, capital_patch)

    checks += _guarded("calapso", run_calapso)
    checks += _guarded("fd.conformal", lambda: _conformality_checks(params, pair, window))
    checks += _guarded("fd.curvature", lambda: _shape_operator_checks(params, pair, window))
    if params.is_singular:
        checks += _guarded("length_probe", lambda: _length_checks(params, pair, entry))
    if params.u2_period is not None and not params.is_singular:
        checks += _guarded("bubbles", lambda: _bubble_checks(params, pair, entry), gating=False)

    report = VerifyReport(family=params.to_dict(), classification=classification.to_dict(), checks=checks)
    if report.passed:
        logger.info(f"Verification passed ({len(checks)} checks)")
    else:
        logger.error(f"Verification failed: first failing check {report.first_failure}")
    return report
