import numpy as np
import pytest

from core.decorators import ConfigurationError
from core.model import Grid
from core.meanfield import (InitialLaw, PathBundle, estimate_mean_field, estimate_objective, euler_step,
                            invert_boundary, reflect, running_reflection, simulate_paths)
from core.volterra import BoundarySurface, MeanField

from conftest import monotone_surface


def constant_surface(grid, level):
    return BoundarySurface(np.full(grid.shape, float(level)), grid)


def test_invert_boundary_clamps_and_round_trip(small_grid, params, payoff):
    b = monotone_surface(small_grid, params, payoff)
    c = invert_boundary(b)
    assert c.values.shape == (small_grid.l1 + 1, small_grid.l3 + 1)
    assert np.all((c.values >= 0) & (c.values <= 1))
    for i in (0, 6, small_grid.l1):
        row = b.values[i]
        assert c.at(i, row.max() + 0.1) == 1.0
        assert c.at(i, row.min() - 0.1) == 0.0
        np.testing.assert_allclose(c.at(i, row), small_grid.y, atol=small_grid.dy)
        np.testing.assert_allclose(c.at(i, row), small_grid.y, atol=1e-12)


def test_inverse_monotone_in_x(converged_small):
    b = converged_small[0].surface
    c = invert_boundary(b)
    assert np.all(np.diff(c.values, axis=1) >= 0)
    x = np.linspace(-12.0, 2.0, 400)
    for i in range(b.grid.l1 + 1):
        assert np.all(np.diff(c.at(i, x)) >= 0)
    np.testing.assert_array_equal(c.at(3, b.grid.x), c.values[3])


def test_inverse_interpolates_in_time(small_grid):
    values = np.tile(np.linspace(-6.0, -4.0, small_grid.l2 + 1), (small_grid.l1 + 1, 1))
    values[:6] += 1.0
    c = invert_boundary(BoundarySurface(values, small_grid))
    x = np.array([-5.5, -4.5])
    t_mid = 0.5 * (small_grid.t[5] + small_grid.t[6])
    np.testing.assert_allclose(c.interp(t_mid, x), 0.5 * (c.at(5, x) + c.at(6, x)))
    np.testing.assert_array_equal(c.interp(small_grid.t[4], x), c.at(4, x))
    np.testing.assert_array_equal(c.interp(small_grid.T, x), c.at(small_grid.l1, x))


def test_non_monotone_rows_are_regularized(small_grid):
    values = np.tile(np.linspace(-6.0, -4.0, small_grid.l2 + 1), (small_grid.l1 + 1, 1))
    values[2, 3] = -3.0
    c = invert_boundary(BoundarySurface(values, small_grid))
    assert [i for i, _ in c.regularized] == [2]
    assert np.all(np.diff(c.rows[2]) >= 0)


def test_euler_step_examples():
    assert euler_step(1.5, 0.7, 0.1, 0.0, 1.0) == pytest.approx(1.57)
    assert euler_step(2.0, 0.0, 1.0, 1.0, 1.0) == 3.0
    with pytest.raises(ConfigurationError):
        euler_step(0.0, 0.5, 0.0, 1.0, 1.0)


def test_euler_step_sample_mean():
    n, dt, sigma = 100_000, 0.25, 1.0
    z = np.random.default_rng(11).standard_normal(n)
    moved = euler_step(-1.0, 0.6, dt, z, sigma)
    assert abs(moved.mean() - (-1.0 + 0.6 * dt)) <= 4 * sigma * np.sqrt(dt / n)


def test_running_reflection_examples():
    Y, xi = running_reflection(np.array([[0.05, 0.1, 0.15]]), np.array([0.2]))
    np.testing.assert_array_equal(xi, 0.0)
    np.testing.assert_array_equal(Y, 0.2)

    Y, xi = running_reflection(np.ones((1, 4)), np.array([0.3]))
    np.testing.assert_allclose(xi[0], 0.7)
    np.testing.assert_allclose(Y[0], 1.0)

    Y, xi = running_reflection(np.array([[0.1, 0.7, 0.4, 0.6]]), np.array([0.2]))
    np.testing.assert_allclose(Y[0], [0.2, 0.7, 0.7, 0.7])
    np.testing.assert_allclose(xi[0], [0.0, 0.5, 0.5, 0.5])


def test_reflect_builds_bundle(small_grid, params, payoff):
    c = invert_boundary(monotone_surface(small_grid, params, payoff))
    X = np.tile(np.linspace(-7.0, -4.0, small_grid.l1 + 1), (3, 1))
    paths = reflect(X, small_grid.t, [0.1, 0.5, 0.9], c)
    assert isinstance(paths, PathBundle)
    assert paths.n_paths == 3
    np.testing.assert_array_equal(paths.c_along[:, 4], c.at(4, X[:, 4]))
    assert np.all(paths.gap >= -1e-10)


def test_simulated_path_invariants(converged_small, params):
    solution, m = converged_small
    c = invert_boundary(solution.surface)
    paths = simulate_paths(c, m, params, n_paths=40, seed=5, steps=60, block_size=16)
    assert paths.X.shape == (40, 61)
    assert np.all(np.diff(paths.xi, axis=1) >= 0)
    assert np.all(paths.xi >= 0)
    assert np.all(paths.Y >= paths.y0_minus[:, None] - 1e-15)
    assert np.all(paths.Y <= 1.0)
    np.testing.assert_allclose(paths.Y, np.minimum(paths.y0_minus[:, None] + paths.xi, 1.0))
    assert paths.gap.min() >= -1e-10
    assert np.all(np.abs(paths.gap[paths.active]) <= 1e-8)


def test_simulate_paths_fixed_start(converged_small, params):
    solution, m = converged_small
    c = invert_boundary(solution.surface)
    paths = simulate_paths(c, m, params, n_paths=1, seed=5, steps=50, start=(-5.0, 0.2))
    assert paths.X[0, 0] == -5.0
    assert paths.y0_minus[0] == 0.2
    assert paths.t[-1] == solution.surface.grid.T


def test_mean_field_without_control(small_grid, params):
    b = constant_surface(small_grid, 1e3)
    m = estimate_mean_field(b, MeanField.constant(small_grid), params, n_paths=2000, seed=1, block_size=300)
    assert np.all(m.values == m.values[0])
    law_mean = InitialLaw.uniform(small_grid).mean_capacity
    assert law_mean == pytest.approx((small_grid.y0 + 1) / 2)
    assert abs(m.values[0] - law_mean) <= 4 * m.standard_error[0]


def test_mean_field_full_investment(small_grid, params):
    b = constant_surface(small_grid, -1e3)
    m = estimate_mean_field(b, MeanField.constant(small_grid), params, n_paths=500, seed=1)
    np.testing.assert_allclose(m.values, 1.0, atol=1e-12)


def test_mean_field_sample_mean_non_decreasing(small_grid, params, payoff):
    b = monotone_surface(small_grid, params, payoff)
    m = estimate_mean_field(b, MeanField.constant(small_grid), params, n_paths=1500, seed=3, block_size=200)
    assert np.all(np.diff(m.values) >= 0)
    assert np.all((m.values >= 0) & (m.values <= 1))
    assert m.n == b.n


def test_mean_field_independent_of_workers(small_grid, params, payoff):
    b = monotone_surface(small_grid, params, payoff)
    m_prev = MeanField(np.linspace(0.9, 0.6, small_grid.l1 + 1), small_grid)
    serial = estimate_mean_field(b, m_prev, params, n_paths=700, seed=42, block_size=64, workers=1)
    threaded = estimate_mean_field(b, m_prev, params, n_paths=700, seed=42, block_size=64, workers=4)
    np.testing.assert_array_equal(serial.values, threaded.values)
    other_seed = estimate_mean_field(b, m_prev, params, n_paths=700, seed=43, block_size=64)
    assert not np.array_equal(serial.values, other_seed.values)


def test_initial_law_from_csv(tmp_path):
    path = tmp_path / "law.csv"
    path.write_text("x,y,weight\n-5.0,0.2,1\n-4.0,0.6,3\n")
    law = InitialLaw.from_csv(str(path))
    np.testing.assert_allclose(law.weights, [0.25, 0.75])
    assert law.mean_capacity == pytest.approx(0.5)
    draws = [law.sample(np.random.default_rng(s)) for s in range(20)]
    assert {(float(x), float(y)) for x, y in draws} <= {(-5.0, 0.2), (-4.0, 0.6)}


def test_initial_law_validation(tmp_path):
    path = tmp_path / "law.csv"
    path.write_text("x,y\n-5.0,0.2\n")
    with pytest.raises(ConfigurationError):
        InitialLaw.from_csv(str(path))
    with pytest.raises(ConfigurationError):
        InitialLaw([0.0], [1.5], [1.0])
    with pytest.raises(ConfigurationError):
        InitialLaw([0.0], [0.5], [0.0])


def test_objective_on_hand_built_path(params, payoff):
    t = np.array([0.0, 0.5, 1.0])
    zeros = np.zeros((1, 3))
    paths = PathBundle(
        t=t, X=zeros, Y=np.ones((1, 3)), xi=np.array([[0.2, 0.2, 0.5]]), c_along=zeros,
        x0=np.zeros(1), y0_minus=np.array([0.8])
    )
    mean, error = estimate_objective(paths, params, payoff)
    profit = 0.5 * (1.0 + np.exp(-params.r * 0.5))
    cost = params.c0 * (0.2 + 0.3 * np.exp(-params.r))
    assert mean == pytest.approx(profit - cost)
    assert error == 0.0
