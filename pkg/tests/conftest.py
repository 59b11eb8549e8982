import numpy as np
import pytest

from fourier_pairs import spectral


@pytest.fixture(scope="session")
def grid():
    return spectral.Grid(12.0, 4096)


@pytest.fixture(scope="session")
def gaussian(grid):
    return spectral.GridFunction.from_space(grid, np.exp(-np.pi * grid.x ** 2))
