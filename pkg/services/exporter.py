"""
File exports: OBJ meshes, CSV tables and canonical JSON documents.
All writers produce byte-identical files for identical inputs.
"""
from pathlib import Path
from typing import Any, Union

import numpy as np
import polars as pl

from exceptions import ExportError
from logger import logger
from services.sampler import NUMERIC_COLUMNS, FieldSamples, SampleTable
from utils import canonical_json, fmt17

PathLike = Union[str, Path]


def _write_text(path: PathLike, text: str) -> Path:
    path = Path(path)
    try:
        with path.open("w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as e:
        raise ExportError(f"cannot write {path}: {e}")
    return path


def _as_text(df: pl.DataFrame, float_columns) -> pl.DataFrame:
    # 17 significant digits, locale independent; nulls stay null
    return df.with_columns([
        pl.col(name).map_elements(fmt17, return_dtype=pl.Utf8, skip_nulls=True) for name in float_columns
    ])


def _write_csv(df: pl.DataFrame, path: PathLike) -> Path:
    path = Path(path)
    try:
        df.write_csv(path, line_terminator="\n", null_value="")
    except (OSError, pl.exceptions.PolarsError) as e:
        raise ExportError(f"cannot write {path}: {e}")
    return path


def export_obj(table: SampleTable, path: PathLike, normals: bool = True) -> Path:
    """
    ASCII OBJ of the unmasked vertices with quads for cells whose four corners are unmasked.
    Vertices keep row-major order and are numbered from 1.
    """
    n1, n2 = table.grid.n1, table.grid.n2
    ok = table.ok.reshape(n1, n2)
    if not ok.any():
        raise ExportError("empty mesh: every vertex is masked")

    index = np.zeros(n1 * n2, dtype=np.int64)
    flat_ok = ok.ravel()
    index[flat_ok] = np.arange(1, int(flat_ok.sum()) + 1)
    index = index.reshape(n1, n2)

    lines = [f"# ribaucour cylinder mesh {n1}x{n2}"]
    position = table.fields.position[flat_ok]
    lines += [f"v {fmt17(x)} {fmt17(y)} {fmt17(z)}" for x, y, z in position]
    if normals:
        normal = table.fields.normal[flat_ok]
        lines += [f"vn {fmt17(x)} {fmt17(y)} {fmt17(z)}" for x, y, z in normal]

    cells = ok[:-1, :-1] & ok[1:, :-1] & ok[1:, 1:] & ok[:-1, 1:]
    faces = 0
    for i, j in np.argwhere(cells):
        corners = (index[i, j], index[i + 1, j], index[i + 1, j + 1], index[i, j + 1])
        if normals:
            lines.append("f " + " ".join(f"{k}//{k}" for k in corners))
        else:
            lines.append("f " + " ".join(str(k) for k in corners))
        faces += 1

    written = _write_text(path, "\n".join(lines) + "\n")
    logger.info(f"Wrote {written}: {len(position)} vertices, {faces} quads")
    return written


def export_csv(table: SampleTable, path: PathLike) -> Path:
    """One row per vertex, masked rows included with empty numeric cells."""
    df = _as_text(table.frame(), ["u1", "u2"] + NUMERIC_COLUMNS)
    written = _write_csv(df.select(["u1", "u2"] + NUMERIC_COLUMNS + ["flags"]), path)
    logger.info(f"Wrote {written}: {df.height} rows")
    return written


def export_field_csv(samples: FieldSamples, path: PathLike) -> Path:
    df = _as_text(samples.frame(), ["u1", "u2", "omega"])
    written = _write_csv(df, path)
    logger.info(f"Wrote {written}: {df.height} field samples of {samples.label}")
    return written


def write_json(document: Any, path: PathLike) -> Path:
    written = _write_text(path, canonical_json(document) + "\n")
    logger.info(f"Wrote {written}")
    return written
