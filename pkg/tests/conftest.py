import warnings

import pytest

from modecast import InstabilityWarning
from modecast.synth import demo_dataset

# The standard records used across the suite. Session-scoped: generation is
# seeded and immutable.


@pytest.fixture(scope="session")
def demo_noisy():
    series, truth = demo_dataset(duration_s=1800.0, dt=0.5, noise_std=0.3, seed=7)
    return series


@pytest.fixture(scope="session")
def demo_clean():
    series, truth = demo_dataset(duration_s=1800.0, dt=0.5, noise_std=0.0, seed=7)
    return series


@pytest.fixture(autouse=True)
def quiet_instability():
    # Noisy fits legitimately produce slightly growing eigenvalues; the
    # warning is part of the contract but drowns the test output.
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", InstabilityWarning)
        yield
