import pytest

from finsite.gallery import (idem_monoid_site, k_simple, k_split, pair_site,
                             rgph_site)
from finsite.sites import trivial_topology


@pytest.fixture(scope="session")
def rgph():
    return rgph_site()


@pytest.fixture(scope="session")
def monoid():
    return idem_monoid_site()


@pytest.fixture(scope="session")
def pair():
    return pair_site()


@pytest.fixture(scope="session")
def ks(rgph):
    return k_simple()


@pytest.fixture(scope="session")
def ke(monoid):
    return k_split()


@pytest.fixture(scope="session")
def triv_rgph(rgph):
    return trivial_topology(rgph)


@pytest.fixture(scope="session")
def triv_monoid(monoid):
    return trivial_topology(monoid)
