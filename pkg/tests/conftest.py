import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from natmaplab import bmeasure

settings.register_profile("lab", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("lab")


@pytest.fixture
def rng():
    return np.random.Generator(np.random.Philox(key=1234))


@pytest.fixture(scope="session")
def grid3():
    return bmeasure.make_grid(3)


@pytest.fixture(scope="session")
def grid3_coarse():
    return bmeasure.make_grid(3, "product_gauss", 24)


@pytest.fixture(scope="session")
def grid2():
    return bmeasure.make_grid(2)
