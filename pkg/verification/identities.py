"""
Algebraic identity audit on deterministic quasi-random points.
"""
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.stats import qmc

from config import config
from geometry.profiles import FamilyParams, ProfilePair, first_integral_terms
from geometry.surface import cylinder_frame, eval_via_general_ribaucour, surface_fields
from logger import logger


def quasi_random_points(n: int, box: Tuple[float, float, float, float], skip: Optional[int] = None) -> np.ndarray:
    """First n points of the unscrambled 2-D Halton sequence after `skip`, mapped into the box."""
    skip = config.HALTON_SKIP if skip is None else skip
    sampler = qmc.Halton(d=2, scramble=False)
    sampler.fast_forward(skip)
    unit = sampler.random(n)
    return qmc.scale(unit, [box[0], box[2]], [box[1], box[3]])


@dataclass(frozen=True)
class IdentityCheck:
    name: str
    max_error: float
    tolerance: float
    worst_point: Optional[Tuple[float, float]]
    count: int

    @property
    def passed(self) -> bool:
        return self.max_error <= self.tolerance

    def to_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "max_error": self.max_error,
            "tolerance": self.tolerance,
            "worst_point": list(self.worst_point) if self.worst_point else None,
            "count": self.count,
            "passed": self.passed,
        }


@dataclass(frozen=True)
class IdentityReport:
    points: int
    box: Tuple[float, float, float, float]
    skip: int
    checks: List[IdentityCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(check.passed for check in self.checks)

    @property
    def first_failure(self) -> Optional[str]:
        return next((check.name for check in self.checks if not check.passed), None)

    def check(self, name: str) -> IdentityCheck:
        return next(c for c in self.checks if c.name == name)

    def to_dict(self) -> Dict[str, object]:
        return {
            "points": self.points,
            "box": list(self.box),
            "halton_skip": self.skip,
            "passed": self.passed,
            "first_failure": self.first_failure,
            "checks": [c.to_dict() for c in self.checks],
        }


def _unmasked_points(params: FamilyParams, pair: ProfilePair, n: int, box, skip: int) -> np.ndarray:
    # draw in batches from one sequence until n unmasked points are collected
    sampler = qmc.Halton(d=2, scramble=False)
    sampler.fast_forward(skip)
    chosen: List[np.ndarray] = []
    have = 0
    for _ in range(50):
        batch = qmc.scale(sampler.random(n), [box[0], box[2]], [box[1], box[3]])
        ok = surface_fields(params, pair, batch[:, 0], batch[:, 1]).ok
        chosen.append(batch[ok])
        have += int(ok.sum())
        if have >= n:
            break
    points = np.concatenate(chosen)[:n]
    if len(points) < n:
        logger.warning(f"Only {len(points)} unmasked audit points found out of {n} requested")
    return points


def _check(name: str, errors: np.ndarray, tol: float, points: np.ndarray) -> IdentityCheck:
    if errors.size == 0:
        return IdentityCheck(name, 0.0, tol, None, 0)
    k = int(np.argmax(errors))
    return IdentityCheck(
        name=name,
        max_error=float(errors[k]),
        tolerance=tol,
        worst_point=(float(points[k, 0]), float(points[k, 1])),
        count=int(errors.size),
    )


def _relative(gap, *scales) -> np.ndarray:
    return np.abs(gap) / np.maximum.reduce([np.ones_like(gap)] + [np.abs(s) for s in scales])


def _amplification(terms, value) -> np.ndarray:
    return np.abs(terms) / np.maximum(np.abs(value), np.finfo(float).tiny)


def _ribaucour_conditioning(values, fields, inter, b: float, c: float) -> np.ndarray:
    """
    Roundoff amplification shared by the closed form and the general transform.

    Sums the cancellation factors of S, of both denominators S - Omega T_i,
    of the lambda_2 numerator, of f + g and of M. Near planar ends S = (f + g) M
    is a small difference of large squares, so plain relative gaps overstate the error.
    """
    s_terms = inter.Omega1 ** 2 + inter.Omega2 ** 2 + inter.W ** 2
    fg = np.abs(values.f) + np.abs(values.g)
    return (1.0
            + _amplification(s_terms, inter.S)
            + _amplification(np.abs(inter.S) + np.abs(inter.Omega * inter.T1), inter.S - inter.Omega * inter.T1)
            + _amplification(np.abs(inter.S) + np.abs(inter.Omega * inter.T2), inter.S - inter.Omega * inter.T2)
            + _amplification(np.abs(inter.W * inter.T2) + np.abs(inter.S), inter.W * inter.T2 - inter.S)
            + _amplification(fg, fields.fg_sum)
            + _amplification(2.0 * abs(b) + abs(c) * fg, fields.M)
            + 2.0 * np.abs(inter.Omega) * np.sqrt(s_terms) / np.maximum(np.abs(inter.S), np.finfo(float).tiny))


def identity_suite(params: FamilyParams, pair: ProfilePair, n_points: Optional[int] = None,
                   box: Optional[Tuple[float, float, float, float]] = None,
                   skip: Optional[int] = None) -> IdentityReport:
    """
    Evaluate the closed-form identities of the family at unmasked quasi-random points.

    Errors are relative: |gap| / max(1, magnitude of the terms involved).
    The first integral leads the list, so a violated constraint is named first.
    """
    n_points = config.IDENTITY_POINTS if n_points is None else n_points
    box = config.IDENTITY_BOX if box is None else tuple(box)
    skip = config.HALTON_SKIP if skip is None else skip
    tol, tol_ode = config.TOL_IDENTITY, config.TOL_ODE
    b, c = params.b, params.c

    pts = _unmasked_points(params, pair, n_points, box, skip)
    u1, u2 = pts[:, 0], pts[:, 1]
    values = pair.evaluate(u1, u2)
    fields = surface_fields(params, pair, u1, u2)
    gen_position, gen_l1, gen_l2, inter = eval_via_general_ribaucour(params, pair, u1, u2)
    frame = cylinder_frame(u1, u2)

    checks: List[IdentityCheck] = []

    E, e_scale = first_integral_terms(values, b, c)
    checks.append(_check("first_integral", _relative(E, e_scale), tol, pts))

    fgM = fields.fg_sum * fields.M
    checks.append(_check("s_factorization", _relative(inter.S - fgM, inter.S, fgM), tol, pts))

    l1, l2 = fields.lambda1, fields.lambda2
    checks.append(_check("mean_curvature", _relative(fields.H - 0.5 * (l1 + l2), fields.H, l1, l2), tol, pts))
    checks.append(_check("skew_curvature", _relative(fields.Hskew - (l1 - l2), fields.Hskew, l1, l2), tol, pts))

    far = np.abs(values.g) >= config.TOL_DOMAIN
    h = (values.f + values.g)[far] / values.g[far]
    lhs = frame.X[far] + h[:, None] * frame.N[far]
    rhs = fields.position[far] + h[:, None] * fields.normal[far]
    gap = np.max(np.abs(lhs - rhs), axis=1)
    scale = np.maximum(np.abs(h), np.max(np.abs(fields.position[far]), axis=1))
    checks.append(_check("sphere_congruence", _relative(gap, scale), tol, pts[far]))

    norm = np.linalg.norm(fields.normal, axis=1)
    correction = np.linalg.norm(fields.normal - frame.N, axis=1)
    checks.append(_check("unit_normal", _relative(norm - 1.0, correction), tol, pts))

    pos_gap = np.max(np.abs(fields.position - gen_position), axis=1)
    pos_scale = np.max(np.abs(fields.position), axis=1)
    curv_gap = np.maximum(_relative(l1 - gen_l1, l1), _relative(l2 - gen_l2, l2))
    # gaps are measured in units of the local roundoff amplification
    conditioning = _ribaucour_conditioning(values, fields, inter, b, c)
    gen_gap = np.maximum(_relative(pos_gap, pos_scale), curv_gap) / conditioning
    checks.append(_check("general_ribaucour", gen_gap, tol, pts))

    checks.append(_check("ode_f", _relative(values.f2 - c * values.f - b, values.f2), tol_ode, pts))
    checks.append(_check("ode_g", _relative(values.g2 + (1.0 + c) * values.g - b, values.g2), tol_ode, pts))

    if params.is_cmc:
        checks.append(_check("cmc_mean_curvature", np.abs(fields.H + 0.5), 1e-14, pts))

    report = IdentityReport(points=len(pts), box=box, skip=skip, checks=checks)
    if report.passed:
        logger.info(f"Identity suite passed on {len(pts)} points")
    else:
        logger.error(f"Identity suite failed: first failing check {report.first_failure}")
    return report
