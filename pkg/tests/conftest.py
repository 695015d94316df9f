import numpy as np
import pytest

from rlmc.potential import Potential
from rlmc.streams import RngStreams


class ZeroNoise(RngStreams):
    """Streams whose Gaussian draws are all zero; ``u`` draws are kept."""

    def draw_xi(self, shape):
        return np.zeros(shape)

    def draw_xi_prime(self, shape):
        return np.zeros(shape)


@pytest.fixture
def unit_quadratic():
    return Potential.quadratic([1.0])


@pytest.fixture
def rng():
    return RngStreams(12345)


@pytest.fixture
def zero_noise():
    return ZeroNoise(777)
