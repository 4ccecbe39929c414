"""
Closed-form profiles of the Ribaucour transforms of the cylinder.

A family member is fixed by the transformation parameter c != 0, the integration
parameter b and the coefficients of two one-variable profiles solving

    f'' - c f = b                (f depends on u1)
    g'' + (1 + c) g = b          (g depends on u2)

subject to the first integral

    E = f'^2 - c f^2 - 2 b f + g'^2 + (1 + c) g^2 - 2 b g = 0.
"""
import math
from dataclasses import dataclass
from enum import Enum
from typing import Dict, List, NamedTuple, Optional, Tuple, Union

import numpy as np

from config import config
from exceptions import ConstraintError, ValidationError
from logger import logger
from utils import rational_approx


class CaseTag(str, Enum):
    POS_C = "PosC"      # c > 0
    MID_C = "MidC"      # -1 < c < 0
    NEG_ONE = "NegOne"  # c = -1
    LOW_C = "LowC"      # c < -1


# ----------------------------
# Coefficient input modes
# ----------------------------
@dataclass(frozen=True)
class General:
    a1: float
    b1: float
    a2: float
    b2: float


@dataclass(frozen=True)
class Normalized:
    A1: float
    B1: float = 0.0
    a2: float = 0.0  # c = -1 only
    b2: float = 0.0  # c = -1 only


@dataclass(frozen=True)
class SingularNormalized:
    epsilon1: int = 1


Coefficients = Union[General, Normalized, SingularNormalized]


def coefficients_from_spec(mode: str, values: Dict[str, float]) -> Coefficients:
    if mode == "general":
        return General(values["a1"], values["b1"], values["a2"], values["b2"])
    if mode == "normalized":
        return Normalized(
            A1=values["A1"],
            B1=values.get("B1", 0.0),
            a2=values.get("a2", 0.0),
            b2=values.get("b2", 0.0),
        )
    if mode == "singular":
        return SingularNormalized(int(values.get("epsilon1", 1)))
    raise ValidationError(f"unknown coefficient mode {mode!r}")


def coefficients_to_dict(coeffs: Coefficients) -> Dict[str, object]:
    if isinstance(coeffs, General):
        return {"mode": "general", "a1": coeffs.a1, "b1": coeffs.b1, "a2": coeffs.a2, "b2": coeffs.b2}
    if isinstance(coeffs, Normalized):
        return {"mode": "normalized", "A1": coeffs.A1, "B1": coeffs.B1, "a2": coeffs.a2, "b2": coeffs.b2}
    return {"mode": "singular", "epsilon1": coeffs.epsilon1}


# ----------------------------
# Parameter-domain rectangles
# ----------------------------
@dataclass(frozen=True)
class Rectangle:
    u1_min: float
    u1_max: float
    u2_min: float
    u2_max: float

    def __post_init__(self):
        bounds = (self.u1_min, self.u1_max, self.u2_min, self.u2_max)
        if not all(math.isfinite(v) for v in bounds):
            raise ValidationError(f"rectangle bounds must be finite, got {bounds}")
        if not (self.u1_min < self.u1_max and self.u2_min < self.u2_max):
            raise ValidationError(f"rectangle needs min < max on both axes, got {bounds}")

    @property
    def center(self) -> Tuple[float, float]:
        return 0.5 * (self.u1_min + self.u1_max), 0.5 * (self.u2_min + self.u2_max)

    def contains(self, u1: float, u2: float, slack: float = 1e-12) -> bool:
        return (self.u1_min - slack <= u1 <= self.u1_max + slack
                and self.u2_min - slack <= u2 <= self.u2_max + slack)

    def expanded(self, margin: float) -> "Rectangle":
        return Rectangle(self.u1_min - margin, self.u1_max + margin, self.u2_min - margin, self.u2_max + margin)

    def to_dict(self) -> Dict[str, float]:
        return {"u1_min": self.u1_min, "u1_max": self.u1_max, "u2_min": self.u2_min, "u2_max": self.u2_max}


# ----------------------------
# Family parameters
# ----------------------------
@dataclass(frozen=True)
class FamilyParams:
    b: float
    c: float
    case: CaseTag
    coeffs: Coefficients
    general: General               # coefficients actually evaluated
    constraint_residual: float     # relation LHS - RHS, equal to the first integral
    constraint_scale: float        # largest term of the relation

    @property
    def epsilon(self) -> int:
        return 1 if self.c > 0 else -1

    @property
    def is_singular(self) -> bool:
        return isinstance(self.coeffs, SingularNormalized)

    @property
    def is_cmc(self) -> bool:
        return self.b == 0.0

    @property
    def u1_period(self) -> Optional[float]:
        return 2.0 * math.pi / math.sqrt(-self.c) if self.c < 0 else None

    @property
    def u2_period(self) -> Optional[float]:
        return 2.0 * math.pi / math.sqrt(1.0 + self.c) if self.c > -1 else None

    def to_dict(self) -> Dict[str, object]:
        g = self.general
        return {
            "b": self.b,
            "c": self.c,
            "case": self.case.value,
            "coeffs": coefficients_to_dict(self.coeffs),
            "general": {"a1": g.a1, "b1": g.b1, "a2": g.a2, "b2": g.b2},
            "epsilon": self.epsilon,
            "constraint_residual": self.constraint_residual,
        }


def classify_case(c: float) -> CaseTag:
    if c is None or not math.isfinite(c):
        raise ValidationError(f"transformation parameter c must be finite, got {c!r}")
    if c == 0:
        raise ValidationError("degenerate transform: c = 0 collapses the Ribaucour transform")
    if c > 0:
        return CaseTag.POS_C
    if c == -1:
        return CaseTag.NEG_ONE
    if c > -1:
        return CaseTag.MID_C
    return CaseTag.LOW_C


def _coefficient_squares(case: CaseTag, coeffs: Coefficients, general: General) -> Tuple[float, float, float, float]:
    # Normalized inputs already carry the squares; taking them back avoids a sqrt round trip
    if isinstance(coeffs, Normalized):
        if case is CaseTag.POS_C:
            return coeffs.A1, 0.0, 0.0, coeffs.B1
        if case is CaseTag.MID_C:
            return 0.0, coeffs.A1, 0.0, coeffs.B1
        if case is CaseTag.LOW_C:
            return 0.0, coeffs.A1, coeffs.B1, 0.0
        return 0.0, coeffs.A1, coeffs.a2 * coeffs.a2, coeffs.b2 * coeffs.b2
    return general.a1 ** 2, general.b1 ** 2, general.a2 ** 2, general.b2 ** 2


def constraint_relation(b: float, c: float, case: CaseTag, coeffs: General,
                        squares: Optional[Tuple[float, float, float, float]] = None) -> Tuple[float, float]:
    """
    Evaluate the algebraic relation among (b, c, a1, b1, a2, b2) branch by branch.

    Args:
        squares: (a1^2, b1^2, a2^2, b2^2) when known exactly, otherwise squared from coeffs

    Returns:
        (LHS - RHS, largest term). The difference is the constant value of the first integral.
    """
    if squares is None:
        squares = (coeffs.a1 ** 2, coeffs.b1 ** 2, coeffs.a2 ** 2, coeffs.b2 ** 2)
    sa1, sb1, sa2, sb2 = squares
    if case is CaseTag.NEG_ONE:
        shifted = (b + coeffs.b2) ** 2
        return sa1 + sb1 + sa2 + sb2 - shifted, max(sa1, sb1, sa2, sb2, shifted)

    lhs = b * b / (c * (1.0 + c))
    if case is CaseTag.POS_C:
        f_term = c * (sa1 - sb1)
        g_term = (1.0 + c) * (sa2 + sb2)
    elif case is CaseTag.MID_C:
        f_term = c * (sa1 + sb1)
        g_term = (1.0 + c) * (sa2 + sb2)
    else:
        f_term = c * (sa1 + sb1)
        g_term = (1.0 + c) * (sa2 - sb2)
    scale = max(abs(lhs), abs(c) * (sa1 + sb1), abs(1.0 + c) * (sa2 + sb2))
    return lhs - (f_term - g_term), scale


def _root(value: float, name: str, case: CaseTag) -> float:
    if value < 0:
        raise ValidationError(f"positivity violation: {name} = {value!r} must be >= 0 for {case.value}")
    return math.sqrt(value)


def _normalized_coefficients(case: CaseTag, coeffs: Normalized) -> General:
    A1, B1 = coeffs.A1, coeffs.B1
    if case is CaseTag.POS_C:
        if not B1 > 0:
            raise ValidationError(f"positivity violation: B1 = {B1!r} must be > 0 for PosC")
        return General(_root(A1, "A1", case), 0.0, 0.0, math.sqrt(B1))
    if case is CaseTag.MID_C:
        if not (A1 > 0 and B1 > 0):
            raise ValidationError(f"positivity violation: A1 = {A1!r}, B1 = {B1!r} must both be > 0 for MidC")
        return General(0.0, math.sqrt(A1), 0.0, math.sqrt(B1))
    if case is CaseTag.LOW_C:
        if not A1 > 0:
            raise ValidationError(f"positivity violation: A1 = {A1!r} must be > 0 for LowC")
        return General(0.0, math.sqrt(A1), _root(B1, "B1", case), 0.0)
    if not A1 > 0:
        raise ValidationError(f"positivity violation: A1 = {A1!r} must be > 0 for NegOne")
    return General(0.0, math.sqrt(A1), coeffs.a2, coeffs.b2)


def _singular_coefficients(case: CaseTag, c: float, epsilon1: int) -> Tuple[float, int, General]:
    """
    Profiles vanishing M at a point, with b normalised away.
    Returns (b, epsilon1, coefficients).
    """
    if epsilon1 not in (1, -1):
        raise ValidationError(f"epsilon1 must be +1 or -1, got {epsilon1!r}")
    if case is CaseTag.POS_C:
        # f = (cosh(sqrt(c) u1) + 1)/c, g = (sin(sqrt(1+c) u2) - 1)/(1+c)
        return -1.0, -1, General(1.0 / c, 0.0, 0.0, 1.0 / (1.0 + c))
    if case is CaseTag.MID_C:
        # f = -(sin(sqrt(-c) u1) + e1)/c, g = (sin(sqrt(1+c) u2) + e1)/(1+c)
        return float(epsilon1), epsilon1, General(0.0, -1.0 / c, 0.0, 1.0 / (1.0 + c))
    if case is CaseTag.LOW_C:
        # f = -(sin(sqrt(-c) u1) + 1)/c, g = -(cosh(sqrt(-1-c) u2) - 1)/(1+c)
        return 1.0, 1, General(0.0, -1.0 / c, -1.0 / (1.0 + c), 0.0)
    # f = sin(u1) + e1, g = e1 u2^2 / 2
    return float(epsilon1), epsilon1, General(0.0, 1.0, 0.0, 0.0)


def build_family(b: float, c: float, coeffs: Coefficients, strict: bool = True,
                 tol_constraint: Optional[float] = None) -> FamilyParams:
    """
    Validate (b, c, coefficients) and resolve them to evaluable profile coefficients.

    Args:
        b: Ribaucour integration parameter (replaced by its normalized value for singular families)
        c: transformation parameter, c != 0
        coeffs: General, Normalized or SingularNormalized
        strict: raise on constraint violation; when False the violation is logged and kept
        tol_constraint: relative tolerance on the relation, defaults to config.TOL_CONSTRAINT

    Returns:
        FamilyParams
    """
    case = classify_case(c)
    if b is None or not math.isfinite(b):
        raise ValidationError(f"integration parameter b must be finite, got {b!r}")

    if isinstance(coeffs, SingularNormalized):
        forced_b, eps1, general = _singular_coefficients(case, c, coeffs.epsilon1)
        if forced_b != b:
            logger.info(f"Singular-normalized {case.value} family: b forced from {b} to {forced_b}")
        b = forced_b
        coeffs = SingularNormalized(eps1)
    elif isinstance(coeffs, Normalized):
        general = _normalized_coefficients(case, coeffs)
    elif isinstance(coeffs, General):
        general = coeffs
    else:
        raise ValidationError(f"unsupported coefficient spec {coeffs!r}")

    if not all(math.isfinite(v) for v in (general.a1, general.b1, general.a2, general.b2)):
        raise ValidationError(f"coefficients must be finite, got {general}")

    residual, scale = constraint_relation(b, c, case, general,
                                          squares=_coefficient_squares(case, coeffs, general))
    tol = config.TOL_CONSTRAINT if tol_constraint is None else tol_constraint
    if abs(residual) > tol * max(1.0, scale):
        message = f"constraint violation: relation residual {residual:.12g} exceeds {tol:g} relative"
        if strict:
            raise ConstraintError(message, residual=residual)
        logger.warning(f"{message}; kept for auditing")

    return FamilyParams(b=b, c=c, case=case, coeffs=coeffs, general=general,
                        constraint_residual=residual, constraint_scale=scale)


# ----------------------------
# Profiles
# ----------------------------
HYPERBOLIC = "hyperbolic"
TRIGONOMETRIC = "trigonometric"
QUADRATIC = "quadratic"


@dataclass(frozen=True)
class Profile1D:
    """
    y(u) = p*cosh(k u) + q*sinh(k u) + shift    (hyperbolic)
    y(u) = p*cos(k u) + q*sin(k u) + shift      (trigonometric)
    y(u) = k/2 u^2 + p u + q                    (quadratic; k is the constant second derivative)
    """
    kind: str
    rate: float
    p: float
    q: float
    shift: float = 0.0

    def evaluate(self, u) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        u = np.asarray(u, dtype=float)
        k = self.rate
        if self.kind == HYPERBOLIC:
            ch, sh = np.cosh(k * u), np.sinh(k * u)
            base = self.p * ch + self.q * sh
            return base + self.shift, k * (self.p * sh + self.q * ch), k * k * base
        if self.kind == TRIGONOMETRIC:
            co, si = np.cos(k * u), np.sin(k * u)
            base = self.p * co + self.q * si
            return base + self.shift, k * (self.q * co - self.p * si), -k * k * base
        return 0.5 * k * u * u + self.p * u + self.q, k * u + self.p, np.full_like(u, k)

    @property
    def period(self) -> Optional[float]:
        return 2.0 * math.pi / self.rate if self.kind == TRIGONOMETRIC else None


class ProfileValues(NamedTuple):
    f: np.ndarray
    f1: np.ndarray
    f2: np.ndarray
    g: np.ndarray
    g1: np.ndarray
    g2: np.ndarray


@dataclass(frozen=True)
class ProfilePair:
    params: FamilyParams
    f: Profile1D
    g: Profile1D

    def evaluate(self, u1, u2) -> ProfileValues:
        f, f1, f2 = self.f.evaluate(u1)
        g, g1, g2 = self.g.evaluate(u2)
        return ProfileValues(f, f1, f2, g, g1, g2)


def make_profiles(params: FamilyParams) -> ProfilePair:
    b, c, co = params.b, params.c, params.general
    if c > 0:
        f = Profile1D(HYPERBOLIC, math.sqrt(c), co.a1, co.b1, -b / c)
    else:
        f = Profile1D(TRIGONOMETRIC, math.sqrt(-c), co.a1, co.b1, -b / c)
    if c > -1:
        g = Profile1D(TRIGONOMETRIC, math.sqrt(1.0 + c), co.a2, co.b2, b / (1.0 + c))
    elif c == -1:
        g = Profile1D(QUADRATIC, b, co.a2, co.b2)
    else:
        g = Profile1D(HYPERBOLIC, math.sqrt(-1.0 - c), co.a2, co.b2, b / (1.0 + c))
    return ProfilePair(params=params, f=f, g=g)


def eval_profiles(pair: ProfilePair, u1, u2) -> ProfileValues:
    return pair.evaluate(u1, u2)


def first_integral_terms(values: ProfileValues, b: float, c: float) -> Tuple[np.ndarray, np.ndarray]:
    """Return (E, largest absolute term of E) pointwise."""
    f, f1, _, g, g1, _ = values
    terms = (f1 * f1, -c * f * f, -2.0 * b * f, g1 * g1, (1.0 + c) * g * g, -2.0 * b * g)
    E = terms[0] + terms[1] + terms[2] + terms[3] + terms[4] + terms[5]
    scale = np.max(np.abs(np.stack(np.broadcast_arrays(*terms))), axis=0)
    return E, scale


def first_integral(pair: ProfilePair, u1, u2):
    E, _ = first_integral_terms(pair.evaluate(u1, u2), pair.params.b, pair.params.c)
    return E


# ----------------------------
# Singular points (zeros of M = 2b + c(f - g))
# ----------------------------
def _lattice(stride: int, offset: int, scale: float, lo: float, hi: float) -> List[float]:
    # values (stride*k + offset) * pi / (2 * scale) inside [lo, hi]
    unit = math.pi / (2.0 * scale)
    k_lo = math.ceil((lo / unit - offset) / stride - 1e-9)
    k_hi = math.floor((hi / unit - offset) / stride + 1e-9)
    values = [(stride * k + offset) * unit for k in range(k_lo, k_hi + 1)]
    return [v for v in values if lo - 1e-12 <= v <= hi + 1e-12]


def is_singular_point(pair: ProfilePair, u1: float, u2: float, tol: Optional[float] = None) -> bool:
    """f'(u1) = g'(u2) = g(u2) = 0 and f(u1) = -2b/c, which together are M = 0 with S = 0."""
    tol = config.TOL_SINGULAR_POINT if tol is None else tol
    b, c = pair.params.b, pair.params.c
    v = pair.evaluate(u1, u2)
    target = -2.0 * b / c
    return bool(abs(v.f1) <= tol and abs(v.g1) <= tol and abs(v.g) <= tol
                and abs(v.f - target) <= tol * max(1.0, abs(target)))


def singular_points(params: FamilyParams, window: Rectangle) -> List[Tuple[float, float]]:
    """
    Zeros of M inside the window, ordered by (u1, u2).

    Candidates come from the closed-form lattices with an independent index per
    coordinate; a candidate is kept only when it meets the vanishing conditions.
    Families that are not singular-normalized have no such points.
    """
    if not params.is_singular:
        return []
    c = params.c
    if params.case is CaseTag.POS_C:
        u1s = [0.0] if window.u1_min <= 0.0 <= window.u1_max else []
        u2s = _lattice(4, 1, math.sqrt(1.0 + c), window.u2_min, window.u2_max)
    elif params.case is CaseTag.MID_C:
        u1s = _lattice(2, -1, math.sqrt(-c), window.u1_min, window.u1_max)
        u2s = _lattice(2, -1, math.sqrt(1.0 + c), window.u2_min, window.u2_max)
    elif params.case is CaseTag.LOW_C:
        u1s = _lattice(4, 1, math.sqrt(-c), window.u1_min, window.u1_max)
        u2s = [0.0] if window.u2_min <= 0.0 <= window.u2_max else []
    else:
        u1s = _lattice(2, -1, 1.0, window.u1_min, window.u1_max)
        u2s = [0.0] if window.u2_min <= 0.0 <= window.u2_max else []

    pair = make_profiles(params)
    points = [(u1, u2) for u1 in u1s for u2 in u2s if is_singular_point(pair, u1, u2)]
    return sorted(points)


# ----------------------------
# Geometry classification
# ----------------------------
@dataclass(frozen=True)
class GeometryClass:
    case: CaseTag
    cmc: bool
    sqrt_abs_one_plus_c: float
    one_plus_c_ratio: Optional[Tuple[int, int]]
    sqrt_minus_c: Optional[float]
    minus_c_ratio: Optional[Tuple[int, int]]
    n_bubbles: Optional[int]
    closes_in_u2: bool
    placement: str
    planar_ends: bool

    def to_dict(self) -> Dict[str, object]:
        return {
            "case": self.case.value,
            "cmc": self.cmc,
            "sqrt_abs_one_plus_c": self.sqrt_abs_one_plus_c,
            "one_plus_c_ratio": list(self.one_plus_c_ratio) if self.one_plus_c_ratio else None,
            "sqrt_minus_c": self.sqrt_minus_c,
            "minus_c_ratio": list(self.minus_c_ratio) if self.minus_c_ratio else None,
            "n_bubbles": self.n_bubbles,
            "closes_in_u2": self.closes_in_u2,
            "placement": self.placement,
            "planar_ends": self.planar_ends,
        }


def _placement(params: FamilyParams) -> str:
    b = params.b
    if b == 0:
        return "none"
    if params.case is CaseTag.POS_C:
        return "inside" if b > 0 else "outside"
    if params.case is CaseTag.LOW_C:
        return "outside" if b > 0 else "inside"
    if params.case is CaseTag.NEG_ONE:
        return "outside"
    return "nested"


def classify_geometry(params: FamilyParams) -> GeometryClass:
    c = params.c
    max_den, tol = config.RATIONAL_MAX_DENOMINATOR, config.RATIONAL_TOL
    s_plus = math.sqrt(abs(1.0 + c))
    plus_ratio = rational_approx(s_plus, max_den, tol) if params.case is not CaseTag.NEG_ONE else None
    s_minus = math.sqrt(-c) if c < 0 else None
    minus_ratio = rational_approx(s_minus, max_den, tol) if s_minus is not None else None

    n_bubbles = plus_ratio[0] if plus_ratio and not params.is_cmc else None
    return GeometryClass(
        case=params.case,
        cmc=params.is_cmc,
        sqrt_abs_one_plus_c=s_plus,
        one_plus_c_ratio=plus_ratio,
        sqrt_minus_c=s_minus,
        minus_c_ratio=minus_ratio,
        n_bubbles=n_bubbles,
        closes_in_u2=bool(c > -1 and plus_ratio is not None),
        placement=_placement(params),
        planar_ends=params.is_singular,
    )
