import json
import os

import numpy as np
import pytest

from polarcoord.presets import bsc_scenario

FIXTURES = os.path.join(os.path.dirname(__file__), "fixtures")


@pytest.fixture(scope="session")
def oracle():
    with open(os.path.join(FIXTURES, "oracle_values.json")) as fh:
        return json.load(fh)


@pytest.fixture(scope="session")
def bsc():
    return bsc_scenario()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
