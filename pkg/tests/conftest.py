import numpy as np
import pytest

from lincontrol import LtiSystem


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def pendulum():
    """Linearization of the torque-driven pendulum at the upright position."""
    return LtiSystem([[0.0, 1.0], [1.0, 0.0]], [[0.0], [1.0]], [[1.0, 0.0]])


@pytest.fixture
def double_integrator():
    return LtiSystem([[0.0, 1.0], [0.0, 0.0]], [[0.0], [1.0]])
