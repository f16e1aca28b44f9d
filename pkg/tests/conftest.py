"""Shared scenario fixtures.

The tuned exact-eigenvalue scenarios are expensive to set up (dense
eigensolves), so they are session-scoped and shared across test modules.
"""

import numpy as np
import pytest

from speclab import grids, jordan, lowenergy, potentials
from speclab.grids import GridFunction, Mode


def l1_bump(grid, width=1.0):
    """L1-normalized origin-centered Gaussian bump."""
    prof = np.exp(-((grid.radii / width) ** 2))
    vals = prof * grid.radii if grid.mode is Mode.RADIAL_SWAVE else prof
    f = GridFunction(grid, vals.astype(complex))
    return GridFunction(grid, f.values / grids.profile_lp_norm(f, 1))


@pytest.fixture(scope="session")
def grid20():
    return grids.make_grid(Mode.RADIAL_SWAVE, 20.0, 400)


@pytest.fixture(scope="session")
def well20(grid20):
    return potentials.gaussian_well(grid20, depth=4.0, width=1.0)


@pytest.fixture(scope="session")
def ee6():
    """Tuned exact zero-energy eigenvalue scenario on the L=6 domain."""
    grid = grids.make_grid(Mode.RADIAL_SWAVE, 6.0, 300)
    tuned, c, info = potentials.tune_coupling(potentials.exact_eigen(grid, s=2.0), grid)
    basis = jordan.build_threshold_basis(tuned, grid)
    return {"grid": grid, "V": tuned, "coupling": c, "info": info, "basis": basis}


@pytest.fixture(scope="session")
def ee_small():
    """Tuned exact-eigenvalue scenario on the small L=2.25 domain.

    Small enough that lambda = 0.2 stays below the first free eigenvalue,
    so the regularized series converges on the whole test window.
    """
    grid = grids.make_grid(Mode.RADIAL_SWAVE, 2.25, 225)
    tuned, c, info = potentials.tune_coupling(potentials.exact_eigen(grid, s=2.0), grid)
    basis = jordan.build_threshold_basis(tuned, grid)
    reg = lowenergy.build_S0(tuned, grid, basis, window=0.25)
    return {"grid": grid, "V": tuned, "basis": basis, "reg": reg}


@pytest.fixture(scope="session")
def chain_fixture20(grid20):
    """K=2 finite-rank chain perturbation of the free operator."""
    F = jordan.build_chain_fixture(grid20, {2: 1}, seed=3)
    basis = jordan.build_threshold_basis(F, grid20)
    return {"grid": grid20, "V": F, "basis": basis}
