import math

import pytest

from geometry.profiles import General, Normalized, SingularNormalized, build_family, make_profiles

SQRT6 = math.sqrt(6.0)


@pytest.fixture
def bubbles_inside():
    """c = 3, b = 4*sqrt(6), A1 = 4, B1 = 1."""
    return build_family(4.0 * SQRT6, 3.0, Normalized(A1=4.0, B1=1.0))


@pytest.fixture
def bubbles_inside_pair(bubbles_inside):
    return make_profiles(bubbles_inside)


@pytest.fixture
def cmc_family():
    return build_family(0.0, 3.0, Normalized(A1=4.0, B1=3.0))


@pytest.fixture
def perturbed_family():
    return build_family(4.0 * SQRT6, 3.0, Normalized(A1=4.0, B1=1.1), strict=False)


@pytest.fixture
def singular_pos():
    return build_family(-1.0, 3.0, SingularNormalized(1))


@pytest.fixture
def vertical_bubbles():
    return build_family(2.0, -1.0, General(0.0, 1.0, 0.0, -0.75))
