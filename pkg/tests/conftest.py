import numpy as np
import pytest

from core.model import Grid, ModelParams, sqrt_payoff
from core.volterra import BoundarySurface, MeanField, solve_picard


@pytest.fixture
def params():
    return ModelParams()


@pytest.fixture
def payoff():
    return sqrt_payoff()


@pytest.fixture
def small_grid():
    return Grid(T=1.0, l1=12, l2=6, l3=8)


@pytest.fixture(scope="session")
def reference_grid():
    return Grid()


@pytest.fixture(scope="session")
def converged_small():
    """ Fully converged boundary on a small grid with m = 1, plus its Picard solution. """
    grid, params, payoff = Grid(T=1.0, l1=12, l2=6, l3=8), ModelParams(), sqrt_payoff()
    m = MeanField.constant(grid, 1.0)
    solution = solve_picard(BoundarySurface.terminal(grid, params, payoff), m, params, payoff, eta=1e-13, k_max=60)
    return solution, m


@pytest.fixture(scope="session")
def reference_n0():
    """ First game iteration of the reference experiment (m = 1, cold start, five Picard steps). """
    grid, params, payoff = Grid(), ModelParams(), sqrt_payoff()
    m = MeanField.constant(grid, 1.0)
    solution = solve_picard(BoundarySurface.terminal(grid, params, payoff), m, params, payoff, eta=1e-3, k_max=5)
    return solution, m


def small_overrides(tmp_path=None, **extra) -> dict:
    """ Quick game settings on a coarse grid. """
    values = dict(
        l1=10, l2=5, l3=6, k_max=20, n_max=2, mc_paths=300, block_size=64,
        diag_paths=8, diag_steps=30, path_steps=20, seed=7,
    )
    if tmp_path is not None:
        values['out'] = str(tmp_path)
    values.update(extra)
    return values


def monotone_surface(grid, params, payoff, rng=None, scale=0.0):
    """ x̄(y) rows, optionally perturbed, as a BoundarySurface. """
    b = BoundarySurface.terminal(grid, params, payoff)
    if scale:
        rng = rng or np.random.default_rng(0)
        values = b.values.copy()
        values[:-1] += scale * rng.standard_normal((grid.l1, grid.l2 + 1))
        b = BoundarySurface(values, grid)
    return b
