import numpy as np
import pytest

from idmse.schedule import LinearBeta, VeSchedule, VpSchedule


@pytest.fixture
def vp():
    return VpSchedule(LinearBeta(0.1, 2.0), lambda_rate=1.5)


@pytest.fixture
def ve():
    return VeSchedule(sigma_min=0.05, sigma_max=0.5, lambda_rate=1.5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
