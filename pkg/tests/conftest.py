import numpy as np
import pytest

from trijunction import (BoundaryTriple, CutoffProfile, Grid2D, TripleField,
                         boundary_proxy, frame_vectors)


@pytest.fixture(scope="session")
def frame():
    return frame_vectors()


@pytest.fixture(scope="session")
def cutoff():
    return CutoffProfile(0.25)


@pytest.fixture(scope="session")
def grid():
    """Default production grid."""
    return Grid2D(48, 64)


@pytest.fixture(scope="session")
def grid_small():
    """Coarser grid for the heavier statistical tests."""
    return Grid2D(32, 32)


def translation_field(grid, frame, c):
    """Exact stationary family: constant heights <c, nu_i>."""
    c = np.asarray(c, dtype=float)
    return TripleField.from_arrays(
        grid, [np.full((grid.nx, grid.ny), float(frame.nu_vec(i) @ c)) for i in (1, 2, 3)])


def rotation_field(grid, beta):
    """Exact stationary family: tilted rays, heights beta * x."""
    return TripleField.from_arrays(
        grid, [np.tile(beta * grid.x[:, None], (1, grid.ny)) for _ in range(3)])


def random_boundary(ny, rng, proxy_target, alpha=0.5, max_mode=2):
    """Random band-limited boundary triple scaled to a given proxy norm."""
    k = np.arange(max_mode + 1)
    rows = []
    y = np.arange(ny) / ny
    for _ in range(3):
        c = rng.standard_normal(max_mode + 1)
        s = rng.standard_normal(max_mode + 1)
        rows.append((c[:, None] * np.cos(2 * np.pi * np.outer(k, y))
                     + s[:, None] * np.sin(2 * np.pi * np.outer(k, y))).sum(axis=0))
    phi = BoundaryTriple(ny, np.stack(rows))
    return phi * (proxy_target / boundary_proxy(phi, alpha))
