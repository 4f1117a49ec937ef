import numpy as np
import pytest

from tfp import build, default_spec


@pytest.fixture(scope="session")
def tfp_net():
    return build(default_spec("TFP"), seed=101)


@pytest.fixture(scope="session")
def tfpl_net():
    return build(default_spec("TFP-L"), seed=101)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
