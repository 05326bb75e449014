"""Shared fixtures: the desk parameter set, grids, field corpora, and
session-scoped solver artifacts (scalar ground state, autonomous solves)."""

import numpy as np
import pytest

from choqlab.params import validate_regime, sharp_constant
from choqlab.solver import SolveConfig, solve_autonomous, solve_scalar_ground
from choqlab.spectral import Field, Grid, random_field

DESK = dict(N=1, s=0.4, alpha=0.5, q=3.0)
DESK_MASS = 1.5


@pytest.fixture(scope="session")
def exps():
    return validate_regime(**DESK)


@pytest.fixture(scope="session")
def grid_small():
    return Grid(1, 48.0, 512)


@pytest.fixture(scope="session")
def grid_unit():
    return Grid(1, 48.0, 1024)


@pytest.fixture(scope="session")
def grid_solver():
    return Grid(1, 96.0, 2048)


def make_positive_field(grid, rng, kmax_frac=0.06, contrast=0.85):
    """Positive band-limited field under the decayed envelope: the Hartree
    densities |u|^r stay smooth (no nodal kinks), which the tight fiber
    tolerances rely on."""
    base = np.exp(-((grid.radius() / (0.16 * grid.extent)) ** 8))
    f = random_field(grid, rng, kmax_frac=kmax_frac)
    vals = f.values / np.max(np.abs(f.values))
    return Field(grid, base * (1.0 + contrast * vals))


@pytest.fixture()
def rng():
    return np.random.default_rng(20260808)


@pytest.fixture(scope="session")
def desk_config():
    return SolveConfig(grad_tol=1e-6, poho_tol=0.1, newton_max=40)


@pytest.fixture(scope="session")
def scalar_ground(exps):
    gs = solve_scalar_ground(exps, Grid(1, 96.0, 4096))
    assert gs.converged
    return gs


@pytest.fixture(scope="session")
def c_alpha_q(exps, scalar_ground):
    return sharp_constant(exps, exps.q, scalar_ground.norm2)


@pytest.fixture(scope="session")
def autonomous_mu0(exps, grid_solver, desk_config):
    return solve_autonomous(exps, 0.0, DESK_MASS, grid_solver,
                            config=desk_config)
