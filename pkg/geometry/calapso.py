"""
Calapso-equation fields induced by the transformed cylinders and their finite-difference residuals.

The equation checked is

    (w_12 / w)_11 + (w_12 / w)_22 + (w^2)_12 = 0.
"""
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from config import config
from exceptions import MaskedRegionError, ValidationError
from geometry.profiles import FamilyParams, ProfilePair, Rectangle, make_profiles
from geometry.surface import surface_fields
from logger import logger


class FieldKind(str, Enum):
    OMEGA = "omega"
    CAPITAL_OMEGA = "capital_omega"
    CUSTOM = "custom"


ScalarFunction = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class CalapsoField:
    kind: FieldKind
    evaluator: ScalarFunction
    params: Optional[FamilyParams] = None
    epsilon: Optional[int] = None
    scale: float = 1.0
    label: str = ""

    def __call__(self, u1, u2) -> np.ndarray:
        u1, u2 = np.broadcast_arrays(np.asarray(u1, dtype=float), np.asarray(u2, dtype=float))
        values = self.evaluator(u1, u2)
        return values if self.scale == 1.0 else self.scale * values

    def scaled(self, factor: float) -> "CalapsoField":
        return replace(self, scale=self.scale * factor, label=f"{factor:g}*{self.label}")

    def negated(self) -> "CalapsoField":
        return replace(self, scale=-self.scale, label=f"-{self.label}")


def make_field(params: FamilyParams, kind, tol_domain: Optional[float] = None,
               tol_sing: Optional[float] = None) -> CalapsoField:
    """
    Closed-form Calapso fields of a family:
        omega         = eps*sqrt(2)*(M + 2cg)/(2M)
        capital_omega = eps*sqrt(2)*(f - g)/(f + g)
    with eps the sign of c. Values are NaN where the denominator is masked.
    """
    kind = FieldKind(kind)
    if kind is FieldKind.CUSTOM:
        raise ValidationError("custom fields enter through custom_field, not make_field")
    tol_domain = config.TOL_DOMAIN if tol_domain is None else tol_domain
    tol_sing = config.TOL_SING if tol_sing is None else tol_sing
    pair = make_profiles(params)
    b, c, eps = params.b, params.c, params.epsilon
    root2 = math.sqrt(2.0)

    if kind is FieldKind.OMEGA:
        def evaluate(u1, u2):
            v = pair.evaluate(u1, u2)
            M = 2.0 * b + c * (v.f - v.g)
            ok = np.abs(M) >= tol_sing
            m = np.where(ok, M, 1.0)
            return np.where(ok, eps * root2 * (m + 2.0 * c * v.g) / (2.0 * m), np.nan)
    else:
        def evaluate(u1, u2):
            v = pair.evaluate(u1, u2)
            s = v.f + v.g
            ok = np.abs(s) >= tol_domain
            s = np.where(ok, s, 1.0)
            return np.where(ok, eps * root2 * (v.f - v.g) / s, np.nan)

    return CalapsoField(kind=kind, evaluator=evaluate, params=params, epsilon=eps, label=kind.value)


def custom_field(fn: ScalarFunction, label: str = "custom") -> CalapsoField:
    return CalapsoField(kind=FieldKind.CUSTOM, evaluator=fn, label=label)


def field_from_surface(params: FamilyParams, pair: ProfilePair, which: str = "mean",
                       tol_domain: Optional[float] = None, tol_sing: Optional[float] = None) -> CalapsoField:
    """sqrt(2)*psi*H (mean) or sqrt(2)*psi*Hskew (skew) as a custom field."""
    if which not in ("mean", "skew"):
        raise ValidationError(f"which must be 'mean' or 'skew', got {which!r}")
    root2 = math.sqrt(2.0)

    def evaluate(u1, u2):
        fields = surface_fields(params, pair, u1, u2, tol_domain, tol_sing)
        curvature = fields.H if which == "mean" else fields.Hskew
        return root2 * fields.psi * curvature

    return CalapsoField(kind=FieldKind.CUSTOM, evaluator=evaluate, label=f"sqrt2_psi_{which}")


# ----------------------------
# Residuals
# ----------------------------
@dataclass(frozen=True)
class ResidualReport:
    patch: Rectangle
    h: float
    u1: np.ndarray
    u2: np.ndarray
    residual_grid: np.ndarray
    max_abs: float
    l2: float
    roundoff: float = 0.0

    @property
    def resolved(self) -> bool:
        """Residual stands clear of the rounding noise of the stencils."""
        return self.max_abs > config.CALAPSO_ROUNDOFF_MARGIN * self.roundoff

    def to_dict(self) -> Dict[str, object]:
        return {
            "patch": self.patch.to_dict(),
            "h": self.h,
            "shape": list(self.residual_grid.shape),
            "max_abs": self.max_abs,
            "l2": self.l2,
            "roundoff": self.roundoff,
        }


def _axis(lo: float, hi: float, h: float) -> np.ndarray:
    n = int(math.floor((hi - lo) / h + 1e-9))
    if n < 2:
        raise ValidationError(f"step h = {h:g} leaves fewer than 3 points on [{lo:g}, {hi:g}]")
    # two ghost nodes beyond each end for the nested stencils
    return lo + h * np.arange(-2, n + 3)


def calapso_residual(field: CalapsoField, patch: Rectangle, h: float) -> ResidualReport:
    """
    Residual of the Calapso equation with centered second-order stencils.

    q = w_12 / w is formed first on a grid one node wider than the patch,
    then differentiated twice; (w^2)_12 uses the 4-point cross directly.
    """
    if not (h > 0 and math.isfinite(h)):
        raise ValidationError(f"step h must be positive, got {h!r}")
    e1 = _axis(patch.u1_min, patch.u1_max, h)
    e2 = _axis(patch.u2_min, patch.u2_max, h)
    U1, U2 = np.meshgrid(e1, e2, indexing="ij")
    W = field(U1, U2)

    bad = ~np.isfinite(W)
    if bad.any():
        i, j = np.argwhere(bad)[0]
        raise MaskedRegionError(f"stencil of {field.label} touches a masked point at u = ({U1[i, j]:.12g}, {U2[i, j]:.12g})")
    inner = W[1:-1, 1:-1]
    vanishing = np.abs(inner) <= config.CALAPSO_ZERO_TOL
    if vanishing.any():
        i, j = np.argwhere(vanishing)[0] + 1
        raise MaskedRegionError(f"{field.label} vanishes inside the stencil at u = ({U1[i, j]:.12g}, {U2[i, j]:.12g})")

    four_h2 = 4.0 * h * h
    h2 = h * h
    w12 = (W[2:, 2:] - W[2:, :-2] - W[:-2, 2:] + W[:-2, :-2]) / four_h2
    q = w12 / inner
    q11 = (q[2:, 1:-1] - 2.0 * q[1:-1, 1:-1] + q[:-2, 1:-1]) / h2
    q22 = (q[1:-1, 2:] - 2.0 * q[1:-1, 1:-1] + q[1:-1, :-2]) / h2
    S = W * W
    s12 = (S[3:-1, 3:-1] - S[3:-1, 1:-3] - S[1:-3, 3:-1] + S[1:-3, 1:-3]) / four_h2

    residual = q11 + q22 + s12
    # rounding in w_12 / w is amplified by 1/h^2 twice; (w^2)_12 by 1/h^2 once
    spread = float(np.max(np.abs(inner)) / np.min(np.abs(inner)))
    roundoff = float(np.finfo(float).eps * (8.0 * spread / h2 ** 2 + np.max(S) / h2))
    return ResidualReport(
        patch=patch,
        h=h,
        u1=e1[2:-2],
        u2=e2[2:-2],
        residual_grid=residual,
        max_abs=float(np.max(np.abs(residual))),
        l2=float(np.sqrt(np.mean(residual * residual))),
        roundoff=roundoff,
    )


@dataclass(frozen=True)
class ConvergenceStudy:
    label: str
    patch: Rectangle
    reports: List[ResidualReport]
    order: float
    fitted_steps: int = 0

    @property
    def at_roundoff(self) -> bool:
        """Fewer than two steps resolve the residual above rounding noise."""
        return self.fitted_steps < 2

    def within(self, band) -> bool:
        return band[0] <= self.order <= band[1]

    def solves(self, band) -> bool:
        return self.within(band) or (self.at_roundoff and not self.reports[0].resolved)

    def to_dict(self) -> Dict[str, object]:
        return {
            "field": self.label,
            "patch": self.patch.to_dict(),
            "steps": [r.h for r in self.reports],
            "max_abs": [r.max_abs for r in self.reports],
            "l2": [r.l2 for r in self.reports],
            "order": self.order,
            "roundoff": [r.roundoff for r in self.reports],
            "fitted_steps": self.fitted_steps,
        }


def _fit_order(steps: Sequence[float], errors: Sequence[float]) -> float:
    errors = np.asarray(errors, dtype=float)
    if not np.any(errors > 0):
        return math.inf
    errors = np.maximum(errors, np.finfo(float).tiny)
    slope, _ = np.polyfit(np.log(np.asarray(steps, dtype=float)), np.log(errors), 1)
    return float(slope)


def convergence_study(field: CalapsoField, patch: Rectangle, h_list: Sequence[float]) -> ConvergenceStudy:
    steps = [float(h) for h in h_list]
    if len(steps) < 3:
        raise ValidationError(f"need at least 3 step sizes, got {len(steps)}")
    if any(a <= b for a, b in zip(steps, steps[1:])):
        raise ValidationError(f"step sizes must be strictly decreasing, got {steps}")
    reports = [calapso_residual(field, patch, h) for h in steps]
    # the order is fitted on the coarse steps whose residual clears rounding noise
    fitted = 0
    while fitted < len(reports) and reports[fitted].resolved:
        fitted += 1
    used = reports[:fitted] if fitted >= 2 else reports
    order = _fit_order([r.h for r in used], [r.max_abs for r in used])
    if fitted < len(reports):
        logger.debug(f"Calapso residual of {field.label} reaches rounding noise at h = {reports[fitted].h:g}")
    logger.debug(f"Calapso residual of {field.label} on {patch.to_dict()}: order {order:.4f}")
    return ConvergenceStudy(label=field.label, patch=patch, reports=reports, order=order, fitted_steps=fitted)


def residual_convergence_order(field: CalapsoField, patch: Rectangle, h_list: Sequence[float]) -> float:
    return convergence_study(field, patch, h_list).order


# ----------------------------
# Patch auto-selection
# ----------------------------
def select_patch(field: CalapsoField, window: Rectangle, size: Optional[float] = None,
                 h_max: Optional[float] = None, tol_domain: Optional[float] = None,
                 tol_sing: Optional[float] = None) -> Rectangle:
    """
    Square patch inside the window, at least 2*h_max away from zeros of M, f+g and the field.

    Scan nodes are good when |M| and |f+g| exceed 10x their tolerances and
    |field| >= CALAPSO_FIELD_FLOOR. Among admissible placements the one with the
    largest min|field|/max|field| wins (first in row-major order on ties).
    The side is halved up to twice when nothing fits.
    """
    size = config.CALAPSO_PATCH_SIZE if size is None else size
    h_max = max(config.CALAPSO_STEPS) if h_max is None else h_max
    tol_domain = config.TOL_DOMAIN if tol_domain is None else tol_domain
    tol_sing = config.TOL_SING if tol_sing is None else tol_sing

    n1, n2 = config.CALAPSO_SCAN
    s1 = np.linspace(window.u1_min, window.u1_max, n1)
    s2 = np.linspace(window.u2_min, window.u2_max, n2)
    U1, U2 = np.meshgrid(s1, s2, indexing="ij")
    F = np.abs(field(U1, U2))
    good = np.isfinite(F) & (F >= config.CALAPSO_FIELD_FLOOR)
    if field.params is not None:
        v = make_profiles(field.params).evaluate(U1, U2)
        M = 2.0 * field.params.b + field.params.c * (v.f - v.g)
        good &= (np.abs(M) > 10.0 * tol_sing) & (np.abs(v.f + v.g) > 10.0 * tol_domain)
    F = np.where(good, F, np.nan)

    d1, d2 = s1[1] - s1[0], s2[1] - s2[0]
    margin = 2.0 * h_max
    for side in (size, size / 2.0, size / 4.0):
        # scan nodes spanned by the patch plus margin, with one extra node of slack
        k1 = int(math.ceil((side + 2.0 * margin) / d1)) + 2
        k2 = int(math.ceil((side + 2.0 * margin) / d2)) + 2
        if k1 > n1 or k2 > n2:
            continue
        blocks = np.lib.stride_tricks.sliding_window_view(F, (k1, k2))
        admissible = np.all(np.isfinite(blocks), axis=(-2, -1))
        if not admissible.any():
            continue
        ratio = np.where(admissible, blocks.min(axis=(-2, -1)) / blocks.max(axis=(-2, -1)), -1.0)
        i, j = np.unravel_index(int(np.argmax(ratio)), ratio.shape)
        u1_lo = s1[i] + d1 + margin
        u2_lo = s2[j] + d2 + margin
        patch = Rectangle(u1_lo, u1_lo + side, u2_lo, u2_lo + side)
        logger.warning(f"Auto-selected Calapso patch for {field.label}: {patch.to_dict()}")
        return patch

    raise MaskedRegionError(f"no admissible Calapso patch for {field.label} inside {window.to_dict()}")
