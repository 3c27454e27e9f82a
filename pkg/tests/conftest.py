import os

import pytest
from hypothesis import HealthCheck, settings

from shadowlab.models import registry

settings.register_profile("shadowlab", deadline=None, suppress_health_check=[HealthCheck.too_slow],
                          derandomize=True, max_examples=40)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "shadowlab"))


@pytest.fixture(scope="session")
def model():
    return registry.build
