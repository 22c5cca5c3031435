import pytest

from hquesums.analysis import bundled_maass
from hquesums.eigenforms import eigenforms


@pytest.fixture(scope="session")
def delta_10k():
    return eigenforms(12, 10_000)[0]


@pytest.fixture(scope="session")
def delta_120k():
    t = eigenforms(12, 120_000)[0]
    t.lambdas
    return t


@pytest.fixture(scope="session")
def maass_even():
    return bundled_maass("even")


@pytest.fixture(scope="session")
def maass_odd():
    return bundled_maass("odd")


@pytest.fixture(scope="session")
def delta_1m():
    t = eigenforms(12, 1_000_000)[0]
    t.lambdas
    return t
