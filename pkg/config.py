import math
from dataclasses import dataclass
from typing import Tuple


# ================== CONFIGURATION ==================
@dataclass(frozen=True)
class Config:
    VERSION: str = "1.0.0"

    # Masking and constraint tolerances
    TOL_DOMAIN: float = 1e-8
    TOL_SING: float = 1e-8
    TOL_CONSTRAINT: float = 1e-9
    TOL_ODE: float = 1e-9
    TOL_IDENTITY: float = 1e-10
    TOL_SINGULAR_POINT: float = 1e-9

    # Bounded rational detection for sqrt|1+c| and sqrt(-c)
    RATIONAL_MAX_DENOMINATOR: int = 64
    RATIONAL_TOL: float = 1e-9

    # Quasi-random audit points (unscrambled Halton, deterministic)
    IDENTITY_POINTS: int = 1000
    IDENTITY_BOX: Tuple[float, float, float, float] = (-5.0, 5.0, -5.0, 5.0)
    FD_POINTS: int = 100
    HALTON_SKIP: int = 1

    # Finite-difference audits
    FD_STEP: float = 1e-3
    FD_CONDITION_FLOOR: float = 0.1
    FD_CONFORMAL_TOL: float = 1e-4
    FD_CURVATURE_TOL: float = 1e-3
    FD_OFFDIAG_TOL: float = 1e-5
    FD_RATIO_BAND: Tuple[float, float] = (3.5, 4.5)
    FD_MAX_CURVATURE: float = 10.0
    FD_RATIO_FLOOR: float = 1e-9
    FD_CANDIDATES: int = 10
    FD_MIN_SCALE: float = 0.25
    FD_PSI_RANGE: Tuple[float, float] = (1e-2, 1e2)

    # Calapso residuals
    CALAPSO_STEPS: Tuple[float, ...] = (0.04, 0.02, 0.01)
    CALAPSO_ORDER_BAND: Tuple[float, float] = (1.7, 2.3)
    CALAPSO_NEGATIVE_MAX_ORDER: float = 0.5
    CALAPSO_FIELD_FLOOR: float = 1e-3
    CALAPSO_ZERO_TOL: float = 1e-12
    CALAPSO_PATCH_SIZE: float = 0.5
    CALAPSO_SCAN: Tuple[int, int] = (61, 61)
    CALAPSO_ROUNDOFF_MARGIN: float = 4.0

    # Length probes toward planar ends
    SIMPSON_MAX_DEPTH: int = 40
    SIMPSON_REL_TOL: float = 1e-6
    SIMPSON_MAX_PASSES: int = 4
    LENGTH_PROBE_OUTER: float = 0.5
    LENGTH_PROBE_EPSILONS: Tuple[float, ...] = (1e-2, 5e-3, 2e-3, 1e-3)
    LENGTH_PROBE_REL_TOL: float = 0.2

    # Bubble counting
    BUBBLE_RES: Tuple[int, int] = (81, 200)
    BUBBLE_MATCH_TOL: float = 1e-8

    # CLI defaults
    DEFAULT_U1: Tuple[float, float] = (-2.0, 2.0)
    DEFAULT_U2: Tuple[float, float] = (0.0, 2.0 * math.pi)
    DEFAULT_RES: Tuple[int, int] = (41, 41)


config = Config()
