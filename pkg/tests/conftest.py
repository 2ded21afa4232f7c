import numpy as np
import pytest

from kssim import ModelParams, PlanarGrid, make_radial_grid, solve_profile
from kssim import linops


@pytest.fixture(scope="session")
def params_main():
    return ModelParams(mu=1.0, eps=0.02, k=4.0, s=0.5)


@pytest.fixture(scope="session")
def rgrid10():
    return make_radial_grid(10.0, 4000)


@pytest.fixture(scope="session")
def prof_main(params_main):
    return solve_profile(params_main, make_radial_grid(24.0, 4000))


@pytest.fixture(scope="session")
def grid128():
    return PlanarGrid(L=16.0, N=128)


@pytest.fixture(scope="session")
def sys_main(params_main, grid128):
    return linops.build_system(params_main, grid128)


@pytest.fixture(scope="session")
def dyn_grid():
    return linops.dynamics_grid(1.0, 128)


@pytest.fixture(scope="session")
def sys_dyn(params_main, dyn_grid, prof_main):
    return linops.build_system(params_main, dyn_grid, prof=prof_main)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(12345)
