import numpy as np
import pytest

from novikov_lab.spectral import Grid


@pytest.fixture(scope="session")
def grid():
    return Grid(32.0, 1024)


@pytest.fixture(scope="session")
def fine_grid():
    return Grid(32.0, 2**13)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
