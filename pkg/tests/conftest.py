import numpy as np
import pytest

from beamcap.model import ModelParams


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def P(M, B, L):
    """Params in the (M, B_peak, L) order used throughout the tests."""
    return ModelParams(M=M, L=L, B_peak=B)
