import numpy as np
import pytest

from goodweights import dynamics


@pytest.fixture(scope="session")
def small_dataset():
    """2000-sample Lorenz training trajectory plus a 400-sample validation
    one; shared across tests that only need attractor-shaped data."""
    return dynamics.generate_dataset(seed=1234, n_train=2000, n_valid=400)


@pytest.fixture(scope="session")
def small_train(small_dataset):
    return small_dataset[0]


@pytest.fixture(scope="session")
def on_attractor_state(small_train):
    return small_train.states[:, 500].copy()


@pytest.fixture()
def rng():
    return np.random.default_rng(2718)
