import numpy as np
import pytest

from quadprop import classical as C
from quadprop import scenario as S

TIGHT = dict(rtol=1e-12, atol=1e-14)


@pytest.fixture(scope="session")
def sho():
    return S.sho()


@pytest.fixture(scope="session")
def sho_basis(sho):
    """u = cos t, v = sin t."""
    return C.standard_basis(sho, 0.0, **TIGHT)


@pytest.fixture(scope="session")
def full():
    return S.full_quadratic()


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(1234)
