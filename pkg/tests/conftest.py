import numpy as np
import pytest

from cnls.spectral import Field, Grid, field_from_physical, make_grid


def random_field(grid: Grid, seed: int, scale: float = 1.0) -> Field:
    rng = np.random.default_rng(seed)
    vals = rng.standard_normal(grid.shape) + 1j * rng.standard_normal(grid.shape)
    return field_from_physical(grid, scale * vals)


def gaussian_field(grid: Grid, amplitude: float = 1.0, sigma: float = 1.0) -> Field:
    r2 = np.zeros(grid.shape)
    for x in grid.coord_arrays():
        r2 = r2 + x**2
    return field_from_physical(grid, amplitude * np.exp(-r2 / (2.0 * sigma**2)) + 0j)


def rel_err(a: np.ndarray, b: np.ndarray) -> float:
    denom = np.linalg.norm(np.asarray(b).ravel())
    if denom == 0:
        return float(np.linalg.norm(np.asarray(a).ravel()))
    return float(np.linalg.norm((np.asarray(a) - np.asarray(b)).ravel()) / denom)


@pytest.fixture
def grid1d() -> Grid:
    return make_grid(1, 64, 16.0)


@pytest.fixture
def grid3d() -> Grid:
    return make_grid(3, 16, 8.0)
