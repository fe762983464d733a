import pytest

from pimet.limitsys import hawaiian_earring
from pimet.space import circle, wedge_of_circles


@pytest.fixture(scope="session")
def wedge2():
    return wedge_of_circles([1, 1])


@pytest.fixture(scope="session")
def wedge3():
    return wedge_of_circles([1, 1, 1])


@pytest.fixture(scope="session")
def unit_circle():
    return circle(1, 4)


@pytest.fixture(scope="session")
def hawaiian():
    return hawaiian_earring(8)


@pytest.fixture(scope="session")
def hawaiian6():
    return hawaiian_earring(6)
