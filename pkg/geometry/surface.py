"""
Ribaucour transforms of the circular cylinder: positions, normals and curvatures.
"""
from dataclasses import dataclass
from typing import Callable, Dict, NamedTuple, Optional, Tuple

import numpy as np

from config import config
from exceptions import MaskedRegionError
from geometry.profiles import FamilyParams, ProfilePair, ProfileValues

OK = 0
NEAR_DOMAIN_BOUNDARY = 1
NEAR_SINGULAR = 2

# principal curvatures of the cylinder in the dN(e_i) = lambda_i e_i convention
CYLINDER_LAMBDA1 = 0.0
CYLINDER_LAMBDA2 = -1.0


def flag_label(flags: int) -> str:
    if flags == OK:
        return "ok"
    names = []
    if flags & NEAR_DOMAIN_BOUNDARY:
        names.append("near_domain_boundary")
    if flags & NEAR_SINGULAR:
        names.append("near_singular")
    return "|".join(names)


class CylinderFrame(NamedTuple):
    X: np.ndarray
    X1: np.ndarray
    X2: np.ndarray
    N: np.ndarray


def cylinder_frame(u1, u2) -> CylinderFrame:
    """Frame of (cos u2, sin u2, u1) with inner normal; vectors on the last axis."""
    u1, u2 = np.broadcast_arrays(np.asarray(u1, dtype=float), np.asarray(u2, dtype=float))
    co, si = np.cos(u2), np.sin(u2)
    zero, one = np.zeros_like(u1), np.ones_like(u1)
    return CylinderFrame(
        X=np.stack([co, si, u1], axis=-1),
        X1=np.stack([zero, zero, one], axis=-1),
        X2=np.stack([-si, co, zero], axis=-1),
        N=np.stack([-co, -si, zero], axis=-1),
    )


@dataclass(frozen=True)
class SurfaceFields:
    """Closed-form fields on a batch of parameter points; masked entries are NaN."""
    u1: np.ndarray
    u2: np.ndarray
    position: np.ndarray
    normal: np.ndarray
    psi: np.ndarray
    lambda1: np.ndarray
    lambda2: np.ndarray
    H: np.ndarray
    Hskew: np.ndarray
    K: np.ndarray
    M: np.ndarray
    fg_sum: np.ndarray
    flags: np.ndarray

    @property
    def ok(self) -> np.ndarray:
        return self.flags == OK


def _mask_flags(values: ProfileValues, params: FamilyParams, tol_domain: float, tol_sing: float):
    fg_sum = values.f + values.g
    M = 2.0 * params.b + params.c * (values.f - values.g)
    flags = np.where(np.abs(fg_sum) < tol_domain, NEAR_DOMAIN_BOUNDARY, OK)
    flags = flags | np.where(np.abs(M) < tol_sing, NEAR_SINGULAR, OK)
    return fg_sum, M, flags.astype(np.int64)


def surface_fields(params: FamilyParams, pair: ProfilePair, u1, u2,
                   tol_domain: Optional[float] = None, tol_sing: Optional[float] = None) -> SurfaceFields:
    tol_domain = config.TOL_DOMAIN if tol_domain is None else tol_domain
    tol_sing = config.TOL_SING if tol_sing is None else tol_sing
    b, c = params.b, params.c

    u1, u2 = np.broadcast_arrays(np.asarray(u1, dtype=float), np.asarray(u2, dtype=float))
    values = pair.evaluate(u1, u2)
    f, f1, _, g, g1, _ = values
    fg_sum, M, flags = _mask_flags(values, params, tol_domain, tol_sing)
    ok = flags == OK

    # masked entries get unit denominators and are overwritten with NaN below
    s = np.where(ok, fg_sum, 1.0)
    m = np.where(ok, M, 1.0)

    frame = cylinder_frame(u1, u2)
    V = f1[..., None] * frame.X1 + g1[..., None] * frame.X2 - g[..., None] * frame.N
    position = frame.X - (2.0 / m)[..., None] * V
    normal = frame.N + (2.0 * g / (m * s))[..., None] * V

    psi = np.abs(c * s) / np.abs(m)
    lambda1 = -2.0 * g * (b + c * f) / (c * s * s)
    lambda2 = (-c * f * f - 2.0 * b * f - c * g * g) / (c * s * s)
    H = -0.5 - b / (c * s)
    Hskew = (m - 2.0 * b) / (m * psi * psi)
    K = lambda1 * lambda2

    def scalar(a):
        return np.where(ok, a, np.nan)

    def vector(a):
        return np.where(ok[..., None], a, np.nan)

    return SurfaceFields(
        u1=u1, u2=u2,
        position=vector(position), normal=vector(normal),
        psi=scalar(psi), lambda1=scalar(lambda1), lambda2=scalar(lambda2),
        H=scalar(H), Hskew=scalar(Hskew), K=scalar(K),
        M=M, fg_sum=fg_sum, flags=flags,
    )


@dataclass(frozen=True)
class SurfacePoint:
    u: Tuple[float, float]
    position: np.ndarray
    normal: np.ndarray
    psi: float
    lambda1: float
    lambda2: float
    H: float
    Hskew: float
    K: float
    M: float
    fg_sum: float
    flags: int

    @property
    def ok(self) -> bool:
        return self.flags == OK

    def require_ok(self) -> "SurfacePoint":
        if not self.ok:
            raise MaskedRegionError(f"point u = {self.u} is masked ({flag_label(self.flags)})")
        return self

    def to_dict(self) -> Dict[str, object]:
        return {
            "u": list(self.u),
            "position": self.position.tolist(),
            "normal": self.normal.tolist(),
            "psi": self.psi,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "H": self.H,
            "Hskew": self.Hskew,
            "K": self.K,
            "M": self.M,
            "fg_sum": self.fg_sum,
            "flags": flag_label(self.flags),
        }


def eval_surface_point(params: FamilyParams, pair: ProfilePair, u1: float, u2: float,
                       tol_domain: Optional[float] = None, tol_sing: Optional[float] = None) -> SurfacePoint:
    fields = surface_fields(params, pair, float(u1), float(u2), tol_domain, tol_sing)
    return SurfacePoint(
        u=(float(u1), float(u2)),
        position=fields.position,
        normal=fields.normal,
        psi=float(fields.psi),
        lambda1=float(fields.lambda1),
        lambda2=float(fields.lambda2),
        H=float(fields.H),
        Hskew=float(fields.Hskew),
        K=float(fields.K),
        M=float(fields.M),
        fg_sum=float(fields.fg_sum),
        flags=int(fields.flags),
    )


# ----------------------------
# General Ribaucour formulas, specialised to the cylinder
# ----------------------------
class RibaucourIntermediates(NamedTuple):
    Omega: np.ndarray
    Omega1: np.ndarray
    Omega2: np.ndarray
    W: np.ndarray
    S: np.ndarray
    T1: np.ndarray
    T2: np.ndarray


def ribaucour_intermediates(values: ProfileValues) -> RibaucourIntermediates:
    f, f1, f2, g, g1, g2 = values
    # the cylinder's curvature-line frame has vanishing connection form
    return RibaucourIntermediates(
        Omega=f + g,
        Omega1=f1,
        Omega2=g1,
        W=g,
        S=f1 * f1 + g1 * g1 + g * g,
        T1=2.0 * f2,
        T2=2.0 * (g2 + g),
    )


def eval_via_general_ribaucour(params: FamilyParams, pair: ProfilePair, u1, u2,
                               tol_domain: Optional[float] = None, tol_sing: Optional[float] = None):
    """
    Independent evaluation through the general transform
    X~ = X - (2 Omega / S)(Omega1 X1 + Omega2 X2 - W N),
    lambda~_i = (W T_i + lambda_i S) / (S - Omega T_i).

    Returns:
        (position, lambda1, lambda2, intermediates), NaN where masked
    """
    tol_domain = config.TOL_DOMAIN if tol_domain is None else tol_domain
    tol_sing = config.TOL_SING if tol_sing is None else tol_sing
    u1, u2 = np.broadcast_arrays(np.asarray(u1, dtype=float), np.asarray(u2, dtype=float))
    values = pair.evaluate(u1, u2)
    _, _, flags = _mask_flags(values, params, tol_domain, tol_sing)
    ok = flags == OK

    inter = ribaucour_intermediates(values)
    S = np.where(ok, inter.S, 1.0)
    frame = cylinder_frame(u1, u2)
    V = inter.Omega1[..., None] * frame.X1 + inter.Omega2[..., None] * frame.X2 - inter.W[..., None] * frame.N
    position = frame.X - (2.0 * inter.Omega / S)[..., None] * V

    den1 = np.where(ok, S - inter.Omega * inter.T1, 1.0)
    den2 = np.where(ok, S - inter.Omega * inter.T2, 1.0)
    lambda1 = (inter.W * inter.T1 + CYLINDER_LAMBDA1 * S) / den1
    lambda2 = (inter.W * inter.T2 + CYLINDER_LAMBDA2 * S) / den2

    position = np.where(ok[..., None], position, np.nan)
    return position, np.where(ok, lambda1, np.nan), np.where(ok, lambda2, np.nan), inter


# ----------------------------
# Evaluators for the finite-difference oracles
# ----------------------------
Evaluator = Callable[[np.ndarray, np.ndarray], Tuple[np.ndarray, np.ndarray, np.ndarray]]


def surface_evaluator(params: FamilyParams, pair: ProfilePair,
                      tol_domain: Optional[float] = None, tol_sing: Optional[float] = None) -> Evaluator:
    """(u1, u2) -> (position, normal, ok) for the transformed surface."""
    def evaluate(u1, u2):
        fields = surface_fields(params, pair, u1, u2, tol_domain, tol_sing)
        return fields.position, fields.normal, fields.ok
    return evaluate


def cylinder_evaluator() -> Evaluator:
    def evaluate(u1, u2):
        frame = cylinder_frame(u1, u2)
        return frame.X, frame.N, np.ones(frame.X.shape[:-1], dtype=bool)
    return evaluate
