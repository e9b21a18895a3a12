import os

import pytest
from hypothesis import settings

from chermnykh.model import derive_params

settings.register_profile("default", deadline=None, max_examples=50, derandomize=True)
settings.register_profile("thorough", deadline=None, max_examples=2000)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

MU = 0.025


@pytest.fixture
def classical():
    return derive_params(mu=MU)


@pytest.fixture
def drag():
    """Radiation pressure with drag: q1=0.5, cd=1e4."""
    return derive_params(mu=MU, q1=0.5, cd=1e4)


@pytest.fixture
def full():
    """All perturbations switched on."""
    return derive_params(mu=MU, q1=0.5, A2=0.02, Mb=0.2, T=0.01, cd=1e4)
