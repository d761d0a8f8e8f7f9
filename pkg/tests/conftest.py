import numpy as np
import pytest

from ndpinfer import EngineOptions, load_scenario, run_batch


@pytest.fixture(scope="session")
def pennies():
    return load_scenario("pennies")


@pytest.fixture(scope="session")
def penny_batch(pennies):
    """The coin scenario at its documented K; shared across tests."""
    return run_batch(pennies.data, pennies.config, EngineOptions(K=10_000, seed=0))


@pytest.fixture()
def rng():
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(2024)))
