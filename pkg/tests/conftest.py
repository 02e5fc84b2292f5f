import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


@pytest.fixture(scope="session")
def small_activity():
    from fedsilo.data import generate_synthetic_activity

    return generate_synthetic_activity(0, 400)


@pytest.fixture(scope="session")
def small_column():
    """Three short trajectories per V plus one test run each (60 samples)."""
    from fedsilo import colsim

    vs = (1.6, 1.7, 1.8, 1.9, 2.0)
    train = {v: colsim.generate_client_dataset(v, 3 if v != 1.9 else 2, 0) for v in vs}
    test = {v: colsim.generate_client_dataset(v, 1, 99) for v in vs}
    return train, test


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
