import numpy as np
import pytest

from fockdecay.config import RunConfig
from fockdecay.pipeline import Model


@pytest.fixture(scope="session")
def small_cfg():
    """Capacity-2 trap on a coarse short grid; fast enough for unit tests."""
    return RunConfig(
        capacity=2,
        x_min=-10.0,
        x_max=15.0,
        n_points=2501,
        cap_width=3.0,
        n_particles="2",
    )


@pytest.fixture(scope="session")
def small_model(small_cfg):
    return Model.build(small_cfg)


@pytest.fixture(scope="session")
def small_orbs(small_model):
    return small_model.orbitals(2)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(20240817)
