import pytest

from sphere_mt import build_grid


@pytest.fixture(scope="session")
def grid_small():
    return build_grid(24, 48)


@pytest.fixture(scope="session")
def grid_default():
    return build_grid(64, 128)


@pytest.fixture(scope="session")
def grid_opt():
    return build_grid(48, 96)
