import numpy as np
import pytest

from qmoments.apps.renyi import gibbs_z_state

GIBBS_Z_MOMENTS = (0.606776, 0.410166, 0.290865)


@pytest.fixture
def gibbs_z():
    return gibbs_z_state(0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
