import numpy as np
import pytest

from mannadiv.catalog import catalog, two_good_manna, uniform_price
from mannadiv.guarantees import BNC, equalize

SEEDS = (0, 1, 2)


@pytest.fixture(scope="session")
def manna2():
    return two_good_manna()


@pytest.fixture(scope="session")
def theta2(manna2):
    return uniform_price(manna2)


@pytest.fixture(scope="session")
def six_utilities():
    return catalog()


@pytest.fixture(scope="session")
def bnc_reports(manna2, theta2, six_utilities):
    """Bid-and-choose equalizations for the whole catalog, shared across
    test modules because the three-agent ones are slow."""
    out = {}
    for u in six_utilities:
        for n in (2, 3):
            out[u.label, n] = equalize(u, BNC, n, manna=manna2, theta=theta2)
    return out
