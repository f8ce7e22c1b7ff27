import numpy as np
import pytest

from todalab.field import DomainGrid
from todalab.toda import CyclicData, TodaState, solve_toda


@pytest.fixture(scope="session")
def torus_n3():
    grid = DomainGrid("torus", 64, 0.5)
    data = CyclicData(3, grid)
    state, report = solve_toda(data, tol=1e-11)
    return data, state, report


@pytest.fixture(scope="session")
def torus_n2():
    grid = DomainGrid("torus", 64, 0.5)
    data = CyclicData(2, grid)
    state, report = solve_toda(data, tol=1e-11)
    return data, state, report


@pytest.fixture(scope="session")
def torus_n4():
    grid = DomainGrid("torus", 32, 0.5)
    data = CyclicData(4, grid)
    state, report = solve_toda(data, tol=1e-11)
    return data, state, report


def _disk_n3(N, minus=(0.0, 1.0), plus=(1.0,)):
    grid = DomainGrid("disk", N, 2.0)
    data = CyclicData(3, grid, alpha_n_plus=plus, alpha_n_minus=minus)
    state, report = solve_toda(data, tol=1e-10)
    return data, state, report


@pytest.fixture(scope="session")
def disk_n3():
    return _disk_n3(48)


@pytest.fixture(scope="session")
def disk_n3_64():
    return _disk_n3(64)


@pytest.fixture(scope="session")
def disk_n3_128():
    return _disk_n3(128)


@pytest.fixture(scope="session")
def disk_chain():
    # (alpha_2) empty, (alpha_3^+) = {0:1}, (alpha_3^-) = {0:2}
    return _disk_n3(48, minus=(0.0, 0.0, 1.0), plus=(0.0, 1.0))


@pytest.fixture()
def rng():
    return np.random.default_rng(20240817)
