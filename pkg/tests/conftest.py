import math

import pytest

from blockholo import recipes as rc


@pytest.fixture(scope="session")
def bidisk8():
    return rc.make_region(rc.polydisk((1.0, 1.0)), h=1 / 8)


@pytest.fixture(scope="session")
def bidisk16():
    return rc.make_region(rc.polydisk((1.0, 1.0)), h=1 / 16)


@pytest.fixture(scope="session")
def ball16():
    return rc.make_region(rc.euclidean_ball(1.0), h=1 / 16)


@pytest.fixture(scope="session")
def hartogs16():
    return rc.make_region(rc.hartogs_figure(0.5), h=1 / 16)


@pytest.fixture(scope="session")
def spiral16():
    return rc.make_region(rc.spiral(0.1, 6 * math.pi), h=1 / 16, axis_limit=700)


@pytest.fixture(scope="session")
def disk8():
    return rc.make_region(rc.disk_factor(1.0), h=1 / 8)


@pytest.fixture(scope="session")
def annulus8():
    return rc.make_region(rc.annulus_factor(0.4, 1.0), h=1 / 8)
