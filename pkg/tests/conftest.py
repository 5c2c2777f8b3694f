import pytest

from kecone.ke_profile import ModelParams, solve_profile
from kecone.model_comparison import disk_profile


@pytest.fixture(scope="session")
def profiles():
    """Solved profiles shared across the suite, keyed by (n, c)."""
    cache = {}

    def get(n, c, t_max=20.0, tol=1e-10):
        key = (n, c, t_max, tol)
        if key not in cache:
            cache[key] = solve_profile(ModelParams(n, c), t_max, tol)
        return cache[key]

    return get


@pytest.fixture(scope="session")
def disks(profiles):
    """Disk (warping) profiles shared across the suite."""
    cache = {}

    def get(n, c, t_max=20.0):
        key = (n, c, t_max)
        if key not in cache:
            cache[key] = disk_profile(profiles(n, c, t_max))
        return cache[key]

    return get
