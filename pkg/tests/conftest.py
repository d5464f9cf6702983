import numpy as np
import pytest

from vwschro.regularize import build_mollifier
from vwschro.spectral import Grid


@pytest.fixture
def rng():
    return np.random.default_rng(2024)


@pytest.fixture(scope="session")
def grid1d():
    return Grid(1, 1024, 20.0)


@pytest.fixture(scope="session")
def grid1d_small():
    return Grid(1, 256, 20.0)


@pytest.fixture(scope="session")
def grid2d():
    return Grid(2, 64, 10.0)


@pytest.fixture(scope="session")
def grid2d_small():
    return Grid(2, 32, 10.0)


@pytest.fixture(scope="session")
def band_mollifier():
    return build_mollifier("bandlimited", r1=1.0, r2=2.0)


@pytest.fixture(scope="session")
def bump_mollifier():
    return build_mollifier("bump", radius=1.0)
