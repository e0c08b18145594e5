import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_system(kind, n, L, seed):
    from fsewald.harness.runner import generate_system

    return generate_system(kind, n, L, seed)
