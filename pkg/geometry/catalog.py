"""
Named families with documented Calapso patches and planar-end probes.
"""
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

from exceptions import ValidationError
from geometry.profiles import (
    Coefficients,
    FamilyParams,
    Normalized,
    Rectangle,
    SingularNormalized,
    build_family,
    coefficients_to_dict,
)


@dataclass(frozen=True)
class FamilyEntry:
    name: str
    description: str
    b: float
    c: float
    coeffs: Coefficients
    omega_patch: Rectangle
    capital_omega_patch: Rectangle
    probe_point: Optional[Tuple[float, float]] = None
    probe_direction: Optional[Tuple[float, float]] = None
    bubbles: Optional[int] = None  # around the axis once the surface closes in u2

    def build(self, strict: bool = True) -> FamilyParams:
        return build_family(self.b, self.c, self.coeffs, strict=strict)

    def to_dict(self) -> Dict[str, object]:
        return {
            "name": self.name,
            "description": self.description,
            "b": self.b,
            "c": self.c,
            "coeffs": coefficients_to_dict(self.coeffs),
            "omega_patch": self.omega_patch.to_dict(),
            "capital_omega_patch": self.capital_omega_patch.to_dict(),
            "probe_point": list(self.probe_point) if self.probe_point else None,
            "probe_direction": list(self.probe_direction) if self.probe_direction else None,
            "bubbles": self.bubbles,
        }


def _square(u1_min, u1_max, u2_min, u2_max) -> Rectangle:
    return Rectangle(u1_min, u1_max, u2_min, u2_max)


SQRT5 = math.sqrt(5.0)

CATALOG: Dict[str, FamilyEntry] = {
    entry.name: entry
    for entry in [
        FamilyEntry(
            name="bubbles-inside",
            description="c = 3, b = 4*sqrt(6): 2-bubble surface, bubbles inside",
            b=4.0 * math.sqrt(6.0), c=3.0, coeffs=Normalized(A1=4.0, B1=1.0),
            omega_patch=_square(0.5, 1.5, 0.5, 1.5),
            capital_omega_patch=_square(-0.5, 0.5, 0.5, 1.5),
            bubbles=2,
        ),
        FamilyEntry(
            name="bubbles-outside",
            description="c = 3, b = -4*sqrt(6): 2-bubble surface, bubbles outside",
            b=-4.0 * math.sqrt(6.0), c=3.0, coeffs=Normalized(A1=4.0, B1=1.0),
            omega_patch=_square(1.2, 2.0, 0.0, 0.8),
            capital_omega_patch=_square(1.2, 2.0, 0.0, 0.8),
            bubbles=2,
        ),
        FamilyEntry(
            name="nested-bubbles",
            description="c = -16/25, b = 12*sqrt(73)/125: doubly periodic bubbles inside bubbles",
            b=12.0 * math.sqrt(73.0) / 125.0, c=-16.0 / 25.0, coeffs=Normalized(A1=4.0, B1=1.0),
            omega_patch=_square(3.0, 4.0, 3.0, 4.0),
            capital_omega_patch=_square(3.0, 4.0, 3.0, 4.0),
            bubbles=3,
        ),
        FamilyEntry(
            name="low-c-outside",
            description="c = -5, b = 4*sqrt(5)/3: bubbles outside, periodic in u1",
            b=4.0 * SQRT5 / 3.0, c=-5.0, coeffs=Normalized(A1=1.0 / 9.0, B1=0.25),
            omega_patch=_square(1.2, 1.5, 0.3, 0.6),
            capital_omega_patch=_square(1.2, 1.5, 0.3, 0.6),
        ),
        FamilyEntry(
            name="low-c-inside",
            description="c = -5, b = -4*sqrt(5)/3: bubbles inside, periodic in u1",
            b=-4.0 * SQRT5 / 3.0, c=-5.0, coeffs=Normalized(A1=1.0 / 9.0, B1=0.25),
            omega_patch=_square(-1.5, -1.2, 0.3, 0.6),
            capital_omega_patch=_square(-1.5, -1.2, 0.3, 0.6),
        ),
        FamilyEntry(
            name="vertical-bubbles",
            description="c = -1, b = 2: g = u2^2 - 3/4, bubbles along u1",
            b=2.0, c=-1.0, coeffs=Normalized(A1=1.0, a2=0.0, b2=-0.75),
            omega_patch=_square(-1.0, 0.0, -0.5, 0.5),
            capital_omega_patch=_square(-1.0, 0.0, -0.5, 0.5),
        ),
        FamilyEntry(
            name="planar-ends-pos",
            description="c = 3 with M vanishing at (0, (4k+1)pi/4): planar ends",
            b=-1.0, c=3.0, coeffs=SingularNormalized(1),
            omega_patch=_square(1.2, 1.8, 0.0, 0.6),
            capital_omega_patch=_square(1.2, 1.8, 0.0, 0.6),
            probe_point=(0.0, math.pi / 4.0), probe_direction=(0.0, -1.0),
        ),
        FamilyEntry(
            name="planar-ends-mid",
            description="c = -16/25 with M vanishing on a doubly periodic lattice: planar ends",
            b=1.0, c=-16.0 / 25.0, coeffs=SingularNormalized(1),
            omega_patch=_square(-2.3, -1.8, -1.1, -0.6),
            capital_omega_patch=_square(-2.3, -1.8, -1.1, -0.6),
            probe_point=(math.pi / 1.6, -math.pi / 1.2), probe_direction=(1.0, 0.0),
        ),
        FamilyEntry(
            name="planar-ends-low",
            description="c = -5 with M vanishing at ((4k+1)pi/(2 sqrt 5), 0): planar ends",
            b=1.0, c=-5.0, coeffs=SingularNormalized(1),
            omega_patch=_square(1.4, 1.65, 0.0, 0.3),
            capital_omega_patch=_square(0.1, 0.35, -0.2, 0.2),
            probe_point=(math.pi / (2.0 * SQRT5), 0.0), probe_direction=(0.0, 1.0),
        ),
        FamilyEntry(
            name="planar-ends-neg-one",
            description="c = -1 with M vanishing at ((4k+1)pi/2, 0): planar ends",
            b=1.0, c=-1.0, coeffs=SingularNormalized(1),
            omega_patch=_square(-0.5, 0.0, -0.3, 0.3),
            capital_omega_patch=_square(-0.5, 0.0, -0.3, 0.3),
            probe_point=(math.pi / 2.0, 0.0), probe_direction=(0.0, 1.0),
        ),
    ]
}


def get_family(name: str) -> FamilyEntry:
    try:
        return CATALOG[name]
    except KeyError:
        raise ValidationError(f"unknown family {name!r}; known: {', '.join(sorted(CATALOG))}")


def list_families() -> List[FamilyEntry]:
    return [CATALOG[name] for name in sorted(CATALOG)]
