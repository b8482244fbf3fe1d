import pytest
from hypothesis import HealthCheck, settings

from localcycles.padic import PrimeContext

settings.register_profile("default", deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def c3():
    return PrimeContext.create(3)


@pytest.fixture(scope="session")
def c5():
    return PrimeContext.create(5)
