import numpy as np
import pytest

import rksampling as rk


@pytest.fixture(scope="session")
def desk_cube():
    return rk.Cube(4.0, 4.0, 1)


@pytest.fixture(scope="session")
def desk_phi():
    return rk.GeneratorPhi(1, rk.normalize_phi(1))


@pytest.fixture(scope="session")
def desk_lattice(desk_cube):
    return rk.default_lattice(desk_cube)


@pytest.fixture(scope="session")
def desk_kernel(desk_phi, desk_lattice):
    return rk.Kernel(desk_phi, desk_lattice)


@pytest.fixture(scope="session")
def e22():
    return rk.Exponents(2, 2)


@pytest.fixture(scope="session")
def interior_mask(desk_lattice, desk_cube):
    half = np.array([desk_cube.R / 2, desk_cube.S / 2])
    return np.all(np.abs(desk_lattice.nodes) + 1 / 3 <= half + 1e-9, axis=1)


def desk_grid(cells: int) -> "rk.Grid":
    """Canonical padded grid: extent 6 so h = 6/cells."""
    return rk.Grid(rk.Cube(6.0, 6.0, 1), cells, cells)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
