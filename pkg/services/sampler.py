from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields as dataclass_fields
from typing import Dict, List, Optional

import numpy as np
import polars as pl

from config import config
from exceptions import ValidationError
from geometry.calapso import CalapsoField
from geometry.profiles import FamilyParams, ProfilePair, Rectangle
from geometry.surface import SurfaceFields, flag_label, surface_fields
from logger import logger

NUMERIC_COLUMNS = ["x", "y", "z", "psi", "lambda1", "lambda2", "H", "Hskew", "K", "M", "fg_sum"]


@dataclass(frozen=True)
class GridSpec:
    u1_min: float
    u1_max: float
    u2_min: float
    u2_max: float
    n1: int
    n2: int
    tol_domain: float = config.TOL_DOMAIN
    tol_sing: float = config.TOL_SING

    def __post_init__(self):
        # reuses Rectangle's bound checks
        Rectangle(self.u1_min, self.u1_max, self.u2_min, self.u2_max)
        if not (isinstance(self.n1, int) and isinstance(self.n2, int)) or self.n1 < 2 or self.n2 < 2:
            raise ValidationError(f"grid needs at least 2 vertices per axis, got {self.n1}x{self.n2}")
        if not (self.tol_domain > 0 and self.tol_sing > 0):
            raise ValidationError("masking tolerances must be positive")

    @property
    def u1(self) -> np.ndarray:
        return np.linspace(self.u1_min, self.u1_max, self.n1)

    @property
    def u2(self) -> np.ndarray:
        return np.linspace(self.u2_min, self.u2_max, self.n2)

    def to_dict(self) -> Dict[str, object]:
        return {
            "u1": [self.u1_min, self.u1_max],
            "u2": [self.u2_min, self.u2_max],
            "res": [self.n1, self.n2],
            "tol_domain": self.tol_domain,
            "tol_sing": self.tol_sing,
        }


@dataclass(frozen=True)
class SampleTable:
    """Row-major (u1-major) samples; row k is vertex (k // n2, k % n2)."""
    grid: GridSpec
    fields: SurfaceFields

    def __len__(self) -> int:
        return self.grid.n1 * self.grid.n2

    @property
    def ok(self) -> np.ndarray:
        return self.fields.ok

    @property
    def masked_count(self) -> int:
        return int(np.count_nonzero(~self.fields.ok))

    def frame(self) -> pl.DataFrame:
        """Numeric frame; masked cells are null."""
        f = self.fields
        ok = f.ok
        columns = {
            "x": f.position[:, 0], "y": f.position[:, 1], "z": f.position[:, 2],
            "psi": f.psi, "lambda1": f.lambda1, "lambda2": f.lambda2,
            "H": f.H, "Hskew": f.Hskew, "K": f.K, "M": f.M, "fg_sum": f.fg_sum,
        }
        data = {"u1": f.u1, "u2": f.u2}
        data.update({name: np.where(ok, values, np.nan) for name, values in columns.items()})
        df = pl.DataFrame(data, schema={name: pl.Float64 for name in data})
        df = df.with_columns(pl.col(NUMERIC_COLUMNS).fill_nan(None))
        return df.with_columns(pl.Series("flags", [flag_label(int(v)) for v in f.flags], dtype=pl.Utf8))


def _concat_fields(blocks: List[SurfaceFields]) -> SurfaceFields:
    names = [f.name for f in dataclass_fields(SurfaceFields)]
    return SurfaceFields(**{name: np.concatenate([getattr(b, name) for b in blocks]) for name in names})


def sample_grid(params: FamilyParams, pair: ProfilePair, grid: GridSpec, workers: int = 1) -> SampleTable:
    """
    Evaluate the surface at every grid vertex, one u1-row per block.
    Rows are evaluated identically whether or not a thread pool is used.
    """
    if workers < 1:
        raise ValidationError(f"workers must be >= 1, got {workers}")
    u1, u2 = grid.u1, grid.u2

    def row(i: int) -> SurfaceFields:
        return surface_fields(params, pair, np.full(grid.n2, u1[i]), u2, grid.tol_domain, grid.tol_sing)

    if workers == 1:
        blocks = [row(i) for i in range(grid.n1)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            blocks = list(pool.map(row, range(grid.n1)))

    table = SampleTable(grid=grid, fields=_concat_fields(blocks))
    logger.info(f"Sampled {grid.n1}x{grid.n2} grid, {table.masked_count} masked vertices")
    return table


@dataclass(frozen=True)
class FieldSamples:
    grid: GridSpec
    label: str
    u1: np.ndarray
    u2: np.ndarray
    values: np.ndarray

    def frame(self) -> pl.DataFrame:
        df = pl.DataFrame({"u1": self.u1, "u2": self.u2, "omega": self.values},
                          schema={"u1": pl.Float64, "u2": pl.Float64, "omega": pl.Float64})
        return df.with_columns(pl.col("omega").fill_nan(None))


def sample_field(field: CalapsoField, grid: GridSpec) -> FieldSamples:
    U1, U2 = np.meshgrid(grid.u1, grid.u2, indexing="ij")
    values = field(U1, U2).ravel()
    return FieldSamples(grid=grid, label=field.label, u1=U1.ravel(), u2=U2.ravel(), values=values)


def default_grid(u1: Optional[tuple] = None, u2: Optional[tuple] = None, res: Optional[tuple] = None,
                 tol_domain: Optional[float] = None, tol_sing: Optional[float] = None) -> GridSpec:
    u1 = u1 or config.DEFAULT_U1
    u2 = u2 or config.DEFAULT_U2
    n1, n2 = res or config.DEFAULT_RES
    return GridSpec(u1[0], u1[1], u2[0], u2[1], n1, n2,
                    config.TOL_DOMAIN if tol_domain is None else tol_domain,
                    config.TOL_SING if tol_sing is None else tol_sing)
