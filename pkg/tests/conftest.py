import numpy as np
import pytest

from pinchmec.pso import PsoParams
from pinchmec.scenario import ScenarioConfig, derive_constants, sample_devices


@pytest.fixture
def config():
    return ScenarioConfig()


@pytest.fixture
def consts(config):
    return derive_constants(config)


@pytest.fixture
def devices(config):
    return sample_devices(config)


@pytest.fixture
def fast_pso():
    """Reduced-effort PSO settings for unit tests that exercise the full loop."""
    return PsoParams(num_particles=20, max_iters=60, num_starts=2)


def rng(seed=0):
    return np.random.default_rng(seed)
