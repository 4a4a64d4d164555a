import numpy as np
import pytest

from zakotfs import DDGridConfig


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def grid8():
    return DDGridConfig(8, 8)


@pytest.fixture
def grid16():
    return DDGridConfig(16, 16)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
