import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from umbilic_lab.catalog import CATALOG

settings.register_profile("lab", max_examples=40, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "lab"))

ALL_ENTRIES = sorted(CATALOG)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_tangent_pair(fp, rng):
    """Random chart vectors (not unit)."""
    return rng.normal(size=fp.dim), rng.normal(size=fp.dim)
