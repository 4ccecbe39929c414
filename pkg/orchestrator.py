from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from config import config
from exceptions import ValidationError
from geometry.calapso import ConvergenceStudy, FieldKind, convergence_study, make_field, select_patch
from geometry.catalog import FamilyEntry, get_family
from geometry.profiles import (
    FamilyParams,
    ProfilePair,
    Rectangle,
    build_family,
    classify_geometry,
    coefficients_from_spec,
    make_profiles,
    singular_points,
)
from logger import logger
from services.sampler import FieldSamples, GridSpec, SampleTable, sample_field, sample_grid
from utils import canonical_json, parse_coeffs, sha256_text
from verification.suite import VerifyReport, verify_family


@dataclass(frozen=True)
class RunManifest:
    command: str
    inputs: Dict[str, object]
    params: FamilyParams
    window: Rectangle
    tolerances: Dict[str, float]
    extras: Dict[str, object] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, object]:
        params = self.params
        classification = classify_geometry(params)
        return {
            "tool": {"name": "ribaucour-cylinders", "version": config.VERSION},
            "command": self.command,
            "inputs": self.inputs,
            "inputs_sha256": sha256_text(canonical_json(self.inputs, indent=None)),
            "family": params.to_dict(),
            "derived": {
                "f_period": params.u1_period,
                "g_period": params.u2_period,
                "calapso_epsilon": params.epsilon,
                "cmc": params.is_cmc,
                "mean_curvature": -0.5 if params.is_cmc else None,
                "first_integral": params.constraint_residual,
                "window": self.window.to_dict(),
                "singular_points": [list(p) for p in singular_points(params, self.window)],
            },
            "classification": classification.to_dict(),
            "tolerances": self.tolerances,
            **self.extras,
        }


class RibaucourSystem:
    """Composes family construction, sampling, Calapso residuals and audits for one family."""

    def __init__(self, params: FamilyParams, entry: Optional[FamilyEntry] = None,
                 tol_domain: Optional[float] = None, tol_sing: Optional[float] = None):
        self.params = params
        self.entry = entry
        self.pair: ProfilePair = make_profiles(params)
        self.tol_domain = config.TOL_DOMAIN if tol_domain is None else tol_domain
        self.tol_sing = config.TOL_SING if tol_sing is None else tol_sing

    @classmethod
    def from_inputs(cls, b: Optional[float] = None, c: Optional[float] = None, coeffs: Optional[str] = None,
                    family: Optional[str] = None, strict: bool = True,
                    tol_domain: Optional[float] = None, tol_sing: Optional[float] = None) -> "RibaucourSystem":
        """Build from a catalog name or from explicit (b, c, coeffs); the two are exclusive."""
        if family is not None:
            if any(v is not None for v in (b, c, coeffs)):
                raise ValidationError("--family cannot be combined with --b, --c or --coeffs")
            entry = get_family(family)
            logger.info(f"Using catalog family {entry.name}: {entry.description}")
            return cls(entry.build(strict=strict), entry, tol_domain, tol_sing)

        if c is None or coeffs is None:
            raise ValidationError("either --family or both --c and --coeffs are required")
        mode, values = parse_coeffs(coeffs)
        if b is None:
            if mode != "singular":
                raise ValidationError("--b is required unless the coefficients are singular-normalized")
            b = 0.0
        params = build_family(b, c, coefficients_from_spec(mode, values), strict=strict)
        logger.info(f"Built {params.case.value} family with b = {params.b:.17g}, c = {params.c:.17g}")
        return cls(params, None, tol_domain, tol_sing)

    def tolerances(self) -> Dict[str, float]:
        return {
            "tol_domain": self.tol_domain,
            "tol_sing": self.tol_sing,
            "tol_constraint": config.TOL_CONSTRAINT,
            "tol_identity": config.TOL_IDENTITY,
            "tol_ode": config.TOL_ODE,
        }

    def manifest(self, command: str, inputs: Dict[str, object], window: Rectangle,
                 extras: Optional[Dict[str, object]] = None) -> RunManifest:
        return RunManifest(command=command, inputs=inputs, params=self.params, window=window,
                           tolerances=self.tolerances(), extras=extras or {})

    def sample(self, grid: GridSpec, workers: int = 1) -> SampleTable:
        return sample_grid(self.params, self.pair, grid, workers)

    def calapso(self, kind: str, grid: GridSpec, patch: Optional[Rectangle] = None,
                steps: Optional[Sequence[float]] = None) -> Tuple[FieldSamples, ConvergenceStudy]:
        kind = FieldKind(kind)
        fld = make_field(self.params, kind, self.tol_domain, self.tol_sing)
        if patch is None and self.entry is not None:
            patch = self.entry.omega_patch if kind is FieldKind.OMEGA else self.entry.capital_omega_patch
        if patch is None:
            window = Rectangle(grid.u1_min, grid.u1_max, grid.u2_min, grid.u2_max)
            patch = select_patch(fld, window, tol_domain=self.tol_domain, tol_sing=self.tol_sing)
        study = convergence_study(fld, patch, steps or config.CALAPSO_STEPS)
        return sample_field(fld, grid), study

    def singular(self, window: Rectangle) -> List[Tuple[float, float]]:
        return singular_points(self.params, window)

    def classify(self) -> Dict[str, object]:
        return classify_geometry(self.params).to_dict()

    def verify(self, window: Optional[Rectangle] = None) -> VerifyReport:
        return verify_family(self.params, self.pair, self.entry, window)
