"""
Finite-difference, quadrature and grid oracles auditing the closed forms.
"""
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from config import config
from exceptions import MaskedRegionError, ValidationError, VerificationError
from geometry.profiles import FamilyParams, ProfilePair, Rectangle, is_singular_point
from geometry.surface import CYLINDER_LAMBDA1, CYLINDER_LAMBDA2, Evaluator, cylinder_evaluator, surface_fields
from logger import logger


# ----------------------------
# Fundamental forms
# ----------------------------
@dataclass(frozen=True)
class FundamentalForms:
    E: float
    F: float
    G: float
    e: float
    f: float
    g2: float
    at: Tuple[float, float]
    h: float

    def to_dict(self) -> Dict[str, object]:
        return {"E": self.E, "F": self.F, "G": self.G, "e": self.e, "f": self.f, "g2": self.g2,
                "at": list(self.at), "h": self.h}


def _stencil_derivatives(evaluator: Evaluator, u: Tuple[float, float], h: float):
    """Centered first derivatives of position and normal from the 5-point stencil around u."""
    if not h > 0:
        raise ValidationError(f"finite-difference step must be positive, got {h!r}")
    u1, u2 = float(u[0]), float(u[1])
    s1 = np.array([u1, u1 + h, u1 - h, u1, u1])
    s2 = np.array([u2, u2, u2, u2 + h, u2 - h])
    position, normal, ok = evaluator(s1, s2)
    if not np.all(ok):
        k = int(np.argmin(ok))
        raise MaskedRegionError(f"finite-difference stencil hits a masked point at u = ({s1[k]:.12g}, {s2[k]:.12g})")
    X1 = (position[1] - position[2]) / (2.0 * h)
    X2 = (position[3] - position[4]) / (2.0 * h)
    N1 = (normal[1] - normal[2]) / (2.0 * h)
    N2 = (normal[3] - normal[4]) / (2.0 * h)
    return X1, X2, N1, N2


def fd_fundamental_forms(evaluator: Evaluator, u: Tuple[float, float], h: float) -> FundamentalForms:
    X1, X2, N1, N2 = _stencil_derivatives(evaluator, u, h)
    return FundamentalForms(
        E=float(X1 @ X1),
        F=float(X1 @ X2),
        G=float(X2 @ X2),
        e=float(-(N1 @ X1)),
        f=float(-0.5 * (N1 @ X2 + N2 @ X1)),
        g2=float(-(N2 @ X2)),
        at=(float(u[0]), float(u[1])),
        h=h,
    )


def fd_first_fundamental(evaluator: Evaluator, u: Tuple[float, float], h: float) -> FundamentalForms:
    """First form only; the second-form entries are NaN."""
    X1, X2, _, _ = _stencil_derivatives(evaluator, u, h)
    return FundamentalForms(
        E=float(X1 @ X1), F=float(X1 @ X2), G=float(X2 @ X2),
        e=math.nan, f=math.nan, g2=math.nan,
        at=(float(u[0]), float(u[1])), h=h,
    )


@lru_cache(maxsize=1)
def curvature_sign() -> float:
    """
    Sign relating e/E and g2/G to the principal curvatures, pinned on the cylinder
    where they must come out as (0, -1).
    """
    forms = fd_fundamental_forms(cylinder_evaluator(), (0.0, 0.0), config.FD_STEP)
    sign = math.copysign(1.0, CYLINDER_LAMBDA2 * (forms.g2 / forms.G))
    k1, k2 = sign * forms.e / forms.E, sign * forms.g2 / forms.G
    if abs(k1 - CYLINDER_LAMBDA1) > 1e-6 or abs(k2 - CYLINDER_LAMBDA2) > 1e-6:
        raise VerificationError(f"cylinder calibration failed: got ({k1}, {k2}), expected (0, -1)")
    logger.debug(f"Curvature sign calibrated on the cylinder: {sign:+.0f}")
    return sign


@dataclass(frozen=True)
class ShapeOperatorEstimate:
    k1: float
    k2: float
    offdiag: float
    forms: FundamentalForms


def fd_shape_operator(evaluator: Evaluator, u: Tuple[float, float], h: float) -> ShapeOperatorEstimate:
    forms = fd_fundamental_forms(evaluator, u, h)
    sign = curvature_sign()
    k1 = sign * forms.e / forms.E
    k2 = sign * forms.g2 / forms.G
    offdiag = forms.f / (math.sqrt(forms.E * forms.G) * max(1.0, abs(k1), abs(k2)))
    return ShapeOperatorEstimate(k1=k1, k2=k2, offdiag=offdiag, forms=forms)


# ----------------------------
# Adaptive Simpson quadrature
# ----------------------------
def adaptive_simpson(fn: Callable[[float], float], a: float, b: float,
                     rel_tol: Optional[float] = None, max_depth: Optional[int] = None) -> float:
    """
    Adaptive Simpson rule with an explicit stack.

    The absolute tolerance is rel_tol times the current estimate of the integral and
    halves at each subdivision; accepted panels add the Richardson term delta/15.
    A pass that lands well below the estimate it was toleranced on is repeated
    against the refined value, so a coarse first guess cannot loosen the target.
    """
    rel_tol = config.SIMPSON_REL_TOL if rel_tol is None else rel_tol
    max_depth = config.SIMPSON_MAX_DEPTH if max_depth is None else max_depth
    tiny = np.finfo(float).tiny

    def simpson(fa, fm, fb, lo, hi):
        return (hi - lo) * (fa + 4.0 * fm + fb) / 6.0

    fa, fb = fn(a), fn(b)
    fm = fn(0.5 * (a + b))
    whole = simpson(fa, fm, fb, a, b)

    def integrate(tol: float) -> float:
        total = 0.0
        stack = [(a, b, fa, fm, fb, whole, tol, 0)]
        while stack:
            lo, hi, flo, fmid, fhi, est, eps, depth = stack.pop()
            mid = 0.5 * (lo + hi)
            lm, rm = 0.5 * (lo + mid), 0.5 * (mid + hi)
            flm, frm = fn(lm), fn(rm)
            left = simpson(flo, flm, fmid, lo, mid)
            right = simpson(fmid, frm, fhi, mid, hi)
            delta = left + right - est
            if depth >= max_depth or abs(delta) <= 15.0 * eps:
                total += left + right + delta / 15.0
                continue
            stack.append((mid, hi, fmid, frm, fhi, right, 0.5 * eps, depth + 1))
            stack.append((lo, mid, flo, flm, fmid, left, 0.5 * eps, depth + 1))
        return total

    basis = max(abs(whole), tiny)
    total = integrate(rel_tol * basis)
    for _ in range(config.SIMPSON_MAX_PASSES):
        if abs(total) >= 0.5 * basis:
            break
        basis = max(abs(total), tiny)
        total = integrate(rel_tol * basis)
    return total


# ----------------------------
# Length probes toward planar ends
# ----------------------------
@dataclass(frozen=True)
class LengthProbe:
    target: Tuple[float, float]
    direction: Tuple[float, float]
    outer: float
    epsilons: List[float]
    lengths: List[float]
    c_fit: float
    expected: float

    @property
    def monotone(self) -> bool:
        return all(b > a for a, b in zip(self.lengths, self.lengths[1:]))

    @property
    def relative_error(self) -> float:
        return abs(self.c_fit - self.expected) / self.expected

    def passes(self, rel_tol: Optional[float] = None) -> bool:
        rel_tol = config.LENGTH_PROBE_REL_TOL if rel_tol is None else rel_tol
        return self.monotone and self.relative_error <= rel_tol

    def to_dict(self) -> Dict[str, object]:
        return {
            "target": list(self.target),
            "direction": list(self.direction),
            "outer": self.outer,
            "epsilons": self.epsilons,
            "lengths": self.lengths,
            "c_fit": self.c_fit,
            "expected": self.expected,
            "relative_error": self.relative_error,
            "passed": self.passes(),
        }


def length_probe(params: FamilyParams, pair: ProfilePair, p0: Tuple[float, float],
                 direction: Tuple[float, float], epsilons: Optional[Sequence[float]] = None,
                 outer: Optional[float] = None) -> LengthProbe:
    """
    Lengths of the image of the segment p0 + s*direction, s in [eps, outer].

    Near a zero of M the metric factor grows like 4/(|c| r^2), so the lengths
    follow c_fit/eps with c_fit close to 4/|c|.
    """
    if not params.is_singular:
        raise ValidationError("length probes need a singular-normalized family; this family has no singular points")
    if not is_singular_point(pair, p0[0], p0[1]):
        raise ValidationError(f"p0 = {tuple(p0)} is not a singular point of the family")
    epsilons = sorted(config.LENGTH_PROBE_EPSILONS if epsilons is None else epsilons, reverse=True)
    if len(epsilons) < 2 or epsilons[-1] <= 0:
        raise ValidationError(f"need at least two positive epsilons, got {epsilons}")
    outer = config.LENGTH_PROBE_OUTER if outer is None else outer
    if not outer > epsilons[0]:
        raise ValidationError(f"outer radius {outer} must exceed the largest epsilon {epsilons[0]}")

    d = np.asarray(direction, dtype=float)
    norm = float(np.hypot(d[0], d[1]))
    if norm == 0:
        raise ValidationError("probe direction must be non-zero")
    d = d / norm

    def psi(s: float) -> float:
        u1, u2 = p0[0] + s * d[0], p0[1] + s * d[1]
        value = float(surface_fields(params, pair, u1, u2).psi)
        if not math.isfinite(value):
            raise MaskedRegionError(f"length probe segment crosses a masked point at u = ({u1:.12g}, {u2:.12g})")
        return value

    lengths = [adaptive_simpson(psi, eps, outer) for eps in epsilons]
    ea, eb = epsilons[-2], epsilons[-1]
    la, lb = lengths[-2], lengths[-1]
    c_fit = (la - lb) / (1.0 / ea - 1.0 / eb)

    probe = LengthProbe(
        target=(float(p0[0]), float(p0[1])),
        direction=(float(d[0]), float(d[1])),
        outer=outer,
        epsilons=[float(e) for e in epsilons],
        lengths=lengths,
        c_fit=c_fit,
        expected=4.0 / abs(params.c),
    )
    logger.debug(f"Length probe at {probe.target}: c_fit = {c_fit:.6g}, expected {probe.expected:.6g}")
    return probe


# ----------------------------
# Bubble counting
# ----------------------------
@dataclass(frozen=True)
class BubbleCount:
    """
    Bubbles around the axis, counted as repetitions of the curvature pattern in u2.

    K depends on u2 only through g, so the crest profile max_u1 K and the trough
    profile min_u1 K repeat once per period of g; each repetition carries one bubble
    with its dominant maximum at `crests`. Strict 8-neighbour extrema of K are kept
    as diagnostics, they include secondary ripples and move with the resolution.
    """
    n_max: int
    n_min: int
    periods: float
    crests: List[float]
    strict_max: int
    strict_min: int
    window: Rectangle
    resolution: Tuple[int, int]

    @property
    def maxima_per_period(self) -> float:
        return self.n_max / self.periods

    def to_dict(self) -> Dict[str, object]:
        return {
            "n_max": self.n_max,
            "n_min": self.n_min,
            "periods": self.periods,
            "maxima_per_period": self.maxima_per_period,
            "crests": self.crests,
            "strict_max": self.strict_max,
            "strict_min": self.strict_min,
            "window": self.window.to_dict(),
            "resolution": list(self.resolution),
        }


def _whole_periods(width: float, period: Optional[float]) -> Optional[int]:
    if period is None:
        return None
    count = width / period
    return int(round(count)) if round(count) >= 1 and abs(count - round(count)) <= 1e-9 * count else None


def _strict_extrema(K: np.ndarray) -> Tuple[int, int]:
    # u2 wraps; ties go to the first node in row-major order so plateaus of two count once
    center = K[1:-1]
    is_max = np.ones_like(center, dtype=bool)
    is_min = np.ones_like(center, dtype=bool)
    for di in (-1, 0, 1):
        for dj in (-1, 0, 1):
            if di == 0 and dj == 0:
                continue
            shifted = np.roll(np.roll(K, -di, axis=0), -dj, axis=1)[1:-1]
            if (di, dj) < (0, 0):
                is_max &= center > shifted
                is_min &= center < shifted
            else:
                is_max &= center >= shifted
                is_min &= center <= shifted
    return int(is_max.sum()), int(is_min.sum())


def _repetitions(profile: np.ndarray) -> int:
    """Largest k such that the cyclic profile equals itself shifted by len/k samples."""
    n = len(profile)
    spread = float(profile.max() - profile.min())
    if spread <= config.BUBBLE_MATCH_TOL * max(1.0, float(np.max(np.abs(profile)))):
        return 0
    tol = config.BUBBLE_MATCH_TOL * spread
    for k in range(n // 2, 1, -1):
        if n % k == 0 and np.max(np.abs(np.roll(profile, n // k) - profile)) <= tol:
            return k
    return 1


def count_bubbles(params: FamilyParams, pair: ProfilePair, window: Rectangle,
                  resolution: Optional[Tuple[int, int]] = None) -> BubbleCount:
    """
    Count bubbles of K over a window spanning whole u2-periods.

    The u2 axis is sampled periodically with a node count that is a multiple of the
    number of periods, so one repetition is an exact shift of the grid.
    """
    n1, n2 = config.BUBBLE_RES if resolution is None else resolution
    if n1 < 3 or n2 < 3:
        raise ValidationError(f"bubble grid needs at least 3x3 nodes, got {n1}x{n2}")
    periods = _whole_periods(window.u2_max - window.u2_min, params.u2_period)
    if periods is None:
        raise ValidationError(f"bubble window [{window.u2_min:g}, {window.u2_max:g}] must span whole u2-periods "
                              f"of g (period {params.u2_period})")
    n2 = periods * int(math.ceil(n2 / periods))

    u1 = np.linspace(window.u1_min, window.u1_max, n1)
    u2 = np.linspace(window.u2_min, window.u2_max, n2, endpoint=False)
    U1, U2 = np.meshgrid(u1, u2, indexing="ij")
    fields = surface_fields(params, pair, U1, U2)
    if not fields.ok.all():
        i, j = np.argwhere(~fields.ok)[0]
        raise MaskedRegionError(f"bubble window contains a masked point at u = ({U1[i, j]:.12g}, {U2[i, j]:.12g})")

    crest = fields.K.max(axis=0)
    trough = fields.K.min(axis=0)
    n_max, n_min = _repetitions(crest), _repetitions(trough)
    crests: List[float] = []
    if n_max:
        span = n2 // n_max
        crests = [float(u2[r * span + int(np.argmax(crest[r * span:(r + 1) * span]))]) for r in range(n_max)]
    strict_max, strict_min = _strict_extrema(fields.K)
    logger.debug(f"Bubble count over {periods} u2-periods: {n_max} crests, {strict_max} strict maxima")
    return BubbleCount(n_max=n_max, n_min=n_min, periods=float(periods), crests=crests,
                       strict_max=strict_max, strict_min=strict_min, window=window, resolution=(n1, n2))
