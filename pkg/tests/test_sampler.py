import math

import numpy as np
import pytest

from exceptions import ValidationError
from geometry.calapso import FieldKind, make_field
from geometry.profiles import make_profiles
from services.sampler import NUMERIC_COLUMNS, GridSpec, default_grid, sample_field, sample_grid


def test_grid_rows_are_row_major(bubbles_inside, bubbles_inside_pair):
    grid = GridSpec(-1.0, 1.0, 0.0, 2.0, 9, 9)
    table = sample_grid(bubbles_inside, bubbles_inside_pair, grid)
    assert len(table) == 81
    assert table.masked_count == 0
    assert table.fields.u1[9] == pytest.approx(-0.75)
    assert table.fields.u2[1] == pytest.approx(0.25)


def test_singular_point_is_masked(singular_pos):
    q = math.pi / 4
    grid = GridSpec(-0.1, 0.1, q - 0.1, q + 0.1, 5, 5)
    table = sample_grid(singular_pos, make_profiles(singular_pos), grid)
    ok = table.ok.reshape(5, 5)
    assert not ok[2, 2]
    assert ok[0, 0]
    frame = table.frame()
    center = frame.row(12, named=True)
    assert center["x"] is None
    assert center["flags"] != "ok"


def test_frame_schema(bubbles_inside, bubbles_inside_pair):
    frame = sample_grid(bubbles_inside, bubbles_inside_pair, GridSpec(0.0, 1.0, 0.0, 1.0, 2, 3)).frame()
    assert frame.columns == ["u1", "u2"] + NUMERIC_COLUMNS + ["flags"]
    assert frame.height == 6
    assert frame["flags"].to_list() == ["ok"] * 6


@pytest.mark.parametrize("n1,n2", [(1, 5), (5, 1), (0, 0)])
def test_grid_needs_two_vertices(n1, n2):
    with pytest.raises(ValidationError):
        GridSpec(0.0, 1.0, 0.0, 1.0, n1, n2)


def test_grid_rejects_empty_range():
    with pytest.raises(ValidationError):
        GridSpec(1.0, 1.0, 0.0, 1.0, 3, 3)


def test_workers_give_identical_output(bubbles_inside, bubbles_inside_pair):
    grid = GridSpec(-2.0, 2.0, 0.0, 2.0 * math.pi, 17, 23)
    serial = sample_grid(bubbles_inside, bubbles_inside_pair, grid, workers=1)
    threaded = sample_grid(bubbles_inside, bubbles_inside_pair, grid, workers=3)
    assert np.array_equal(serial.fields.position, threaded.fields.position)
    assert np.array_equal(serial.fields.flags, threaded.fields.flags)
    assert serial.frame().equals(threaded.frame())


def test_workers_must_be_positive(bubbles_inside, bubbles_inside_pair):
    with pytest.raises(ValidationError):
        sample_grid(bubbles_inside, bubbles_inside_pair, GridSpec(0.0, 1.0, 0.0, 1.0, 2, 2), workers=0)


def test_field_samples(bubbles_inside):
    grid = GridSpec(0.0, 1.0, 0.0, 1.0, 3, 3)
    samples = sample_field(make_field(bubbles_inside, FieldKind.OMEGA), grid)
    frame = samples.frame()
    assert frame.height == 9
    assert frame["omega"][0] == pytest.approx(1.9370, abs=1e-3)


def test_default_grid():
    grid = default_grid()
    assert grid.u2_max == pytest.approx(2.0 * math.pi)
    assert (grid.n1, grid.n2) == (41, 41)
