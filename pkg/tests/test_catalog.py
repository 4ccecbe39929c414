import pytest

from exceptions import ValidationError
from geometry.catalog import CATALOG, get_family, list_families
from geometry.profiles import classify_geometry


def test_catalog_has_ten_families():
    assert len(CATALOG) == 10
    assert [e.name for e in list_families()] == sorted(CATALOG)


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_every_entry_satisfies_its_constraint(name):
    entry = get_family(name)
    params = entry.build(strict=True)
    assert params.c == entry.c
    assert entry.omega_patch.u1_max > entry.omega_patch.u1_min


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_singular_entries_carry_a_probe(name):
    entry = get_family(name)
    params = entry.build()
    if params.is_singular:
        assert entry.probe_point is not None
        assert entry.probe_direction is not None


def test_entry_to_dict():
    record = get_family("bubbles-inside").to_dict()
    assert record["c"] == 3.0
    assert record["bubbles"] == 2
    assert set(record["omega_patch"]) == {"u1_min", "u1_max", "u2_min", "u2_max"}


def test_unknown_family():
    with pytest.raises(ValidationError, match="unknown family"):
        get_family("torus")


@pytest.mark.parametrize("name", sorted(CATALOG))
def test_bubble_numbers_agree_with_classification(name):
    entry = get_family(name)
    if entry.bubbles is not None:
        assert classify_geometry(entry.build()).n_bubbles == entry.bubbles
