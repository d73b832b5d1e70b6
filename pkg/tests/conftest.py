import math

import pytest

from lrl_lab.core.base import PhaseState
from lrl_lab.core.integrator import IntegrationConfig, integrate
from lrl_lab.core.models import Kepler, MICZ

# r0 = (1, 0, 0), v0 = (0, 1.2, 0), mu = 1: perihelion of an ellipse with
# E = -0.28, L = 1.2, |J| = 0.44
KEPLER_E = -0.28
KEPLER_L = 1.2
KEPLER_J = 0.44
KEPLER_PERIOD = 2.0 * math.pi / (2.0 * 0.28) ** 1.5


@pytest.fixture(scope="session")
def kepler_model():
    return Kepler(mu=1.0)


@pytest.fixture(scope="session")
def kepler_state():
    return PhaseState(0.0, [1.0, 0.0, 0.0], [0.0, 1.2, 0.0])


@pytest.fixture(scope="session")
def kepler_trajectory(kepler_model, kepler_state):
    cfg = IntegrationConfig((0.0, 1.3 * KEPLER_PERIOD), rel_tol=1e-11, abs_tol=1e-13)
    return integrate(kepler_model, kepler_state, cfg)


@pytest.fixture(scope="session")
def micz_model():
    return MICZ(lam=0.3, mu=1.0)


@pytest.fixture(scope="session")
def micz_state():
    return PhaseState(0.0, [1.0, 0.0, 0.2], [0.0, 1.0, 0.1])


@pytest.fixture(scope="session")
def micz_trajectory(micz_model, micz_state):
    return integrate(micz_model, micz_state, IntegrationConfig((0.0, 20.0), rel_tol=1e-11, abs_tol=1e-13))


@pytest.fixture
def kepler_config():
    return {
        "model": {"family": "kepler", "params": {"mu": 1.0}},
        "state": {"r0": [1.0, 0.0, 0.0], "v0": [0.0, 1.2, 0.0]},
        "integration": {"t": 1.3 * KEPLER_PERIOD, "rel_tol": 1e-11, "abs_tol": 1e-13},
    }
