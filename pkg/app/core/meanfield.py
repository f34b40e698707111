"""Generalized inverse of the boundary, reflected capacity paths and the Monte Carlo mean field.

A player starting from (x0, y0-) keeps the capacity at the smallest level compatible with the
target surface c(t, x) = inf{y : b(t, y) > x}:

    xi_t = sup_{s <= t} (c(s, X_s) - y0-)^+,    Y_t = y0- + xi_t.

The state X does not depend on the control, so each path is an Euler walk with the mean-field drift,
reflected afterwards.
"""

from dataclasses import dataclass, field
import logging

import numpy as np

from core.auxiliary import execute_tasks, path_rng
from core.decorators import ConfigurationError
from core.model import Grid, ModelParams, Payoff
from core.volterra import BoundarySurface, MeanField

MONOTONE_TOL = 5e-3
DEFAULT_BLOCK_SIZE = 1000
ACTIVE_TOL = 1e-14


def _invert_row(row:np.ndarray, y:np.ndarray, x) -> np.ndarray:
    """ inf{y : b(y) > x} for a non-decreasing piecewise-linear profile; 0 below its range, 1 at or above it. """
    x = np.asarray(x, dtype=float)
    c = np.where(x < row[0], 0.0, 1.0)
    inside = (x >= row[0]) & (x < row[-1])
    if np.any(inside):
        xs = x[inside]
        k = np.searchsorted(row, xs, side='right')
        lower, upper = row[k - 1], row[k]
        c[inside] = y[k - 1] + (xs - lower) / (upper - lower) * (y[k] - y[k - 1])
    return c


@dataclass
class InverseSurface:
    """ Target capacity c(t_i, x_k) on the (t, x) grid, plus the boundary rows it was inverted from. """
    values: np.ndarray
    grid: Grid
    rows: np.ndarray            # y-monotone boundary rows, one per t_i
    n: int = 0
    regularized: list = field(default_factory=list)  # (i, violation) of rows that needed the running max

    def at(self, i:int, x) -> np.ndarray:
        """ c(t_i, x) for arbitrary x. """
        return _invert_row(self.rows[i], self.grid.y, x)

    def interp(self, t:float, x) -> np.ndarray:
        """ c(t, x) linear in t between the coarse rows. """
        grid = self.grid
        pos = min(max(t / grid.dt, 0.0), float(grid.l1))
        i = min(int(np.floor(pos + 1e-9)), grid.l1)
        w = pos - i
        if i == grid.l1 or w <= 1e-9:
            return self.at(i, x)
        return (1.0 - w) * self.at(i, x) + w * self.at(i + 1, x)


def invert_boundary(b:BoundarySurface) -> InverseSurface:
    """ Tabulate c(t_i, x_k) = inf{y in [y0, 1] : b(t_i, y) > x_k} on the x-grid. """
    grid = b.grid
    rows = np.maximum.accumulate(b.values, axis=1)
    violations = (rows - b.values).max(axis=1)
    regularized = [(int(i), float(v)) for i, v in enumerate(violations) if v > MONOTONE_TOL]
    if regularized:
        logging.warning(f"Boundary n={b.n} not monotone in y on {len(regularized)} row(s), running max applied: {regularized[:10]}")
    values = np.vstack([_invert_row(row, grid.y, grid.x) for row in rows])
    return InverseSurface(values=values, grid=grid, rows=rows, n=b.n, regularized=regularized)


def euler_step(x, m_i:float, dt:float, z, sigma:float):
    """ X_{t+dt} = X_t + m(t) dt + sigma sqrt(dt) Z. """
    if not dt > 0:
        raise ConfigurationError(f"Euler step needs dt > 0, got {dt}")
    return x + m_i * dt + sigma * np.sqrt(dt) * z


def running_reflection(c_along:np.ndarray, y0_minus) -> tuple:
    """ Minimal non-decreasing push keeping Y >= c: returns (Y, xi) with the same shape as `c_along`. """
    c_along = np.asarray(c_along, dtype=float)
    y0_minus = np.asarray(y0_minus, dtype=float)[..., None]
    xi = np.maximum.accumulate(np.maximum(c_along - y0_minus, 0.0), axis=-1)
    Y = np.minimum(y0_minus + xi, 1.0)
    return Y, xi


@dataclass
class PathBundle:
    """ Simulated paths, one row per path and one column per time node (column 0 is t = 0 after the initial jump). """
    t: np.ndarray
    X: np.ndarray
    Y: np.ndarray
    xi: np.ndarray
    c_along: np.ndarray
    x0: np.ndarray
    y0_minus: np.ndarray
    seed: int = 0
    stream: int = 0

    @property
    def n_paths(self) -> int:
        return self.X.shape[0]

    @property
    def gap(self) -> np.ndarray:
        """ G_t = Y_t - c(t, X_t). """
        return self.Y - self.c_along

    @property
    def increments(self) -> np.ndarray:
        """ Δxi per step, the first entry being the jump from xi_{0-} = 0. """
        return np.diff(self.xi, axis=1, prepend=0.0)

    @property
    def active(self) -> np.ndarray:
        return self.increments > ACTIVE_TOL


def reflect(X:np.ndarray, t:np.ndarray, y0_minus, c:InverseSurface, x0=None, seed:int=0, stream:int=0) -> PathBundle:
    """ Evaluate c along the simulated states (before each Euler move) and apply the running-max reflection. """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y0_minus = np.broadcast_to(np.asarray(y0_minus, dtype=float), (X.shape[0],)).copy()
    c_along = np.column_stack([c.interp(t_i, X[:, i]) for i, t_i in enumerate(t)])
    Y, xi = running_reflection(c_along, y0_minus)
    return PathBundle(
        t=np.asarray(t, dtype=float), X=X, Y=Y, xi=xi, c_along=c_along,
        x0=X[:, 0].copy() if x0 is None else np.asarray(x0, dtype=float),
        y0_minus=y0_minus, seed=seed, stream=stream
    )


@dataclass
class InitialLaw:
    """ Discrete law of (X_0, Y_{0-}) on finitely many atoms. """
    x: np.ndarray
    y: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float).ravel()
        self.y = np.asarray(self.y, dtype=float).ravel()
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if not (self.x.size == self.y.size == self.weights.size) or self.x.size == 0:
            raise ConfigurationError("Initial law needs matching, non-empty x, y and weight columns")
        if np.any(self.y < 0) or np.any(self.y > 1):
            raise ConfigurationError("Initial law capacities must lie in [0, 1]")
        if np.any(self.weights < 0) or not self.weights.sum() > 0:
            raise ConfigurationError("Initial law weights must be >= 0 with a positive total")
        self.weights = self.weights / self.weights.sum()

    @classmethod
    def uniform(cls, grid:Grid) -> 'InitialLaw':
        """ Uniform law on the product of the x- and y-grids. """
        xx, yy = np.meshgrid(grid.x, grid.y, indexing='ij')
        return cls(xx.ravel(), yy.ravel(), np.ones(xx.size))

    @classmethod
    def from_csv(cls, path:str) -> 'InitialLaw':
        """ CSV with header x,y,weight. """
        try:
            table = np.genfromtxt(path, delimiter=',', names=True, dtype=float)
        except OSError as e:
            raise ConfigurationError(f"Cannot read initial law '{path}': {e}") from e
        missing = {'x', 'y', 'weight'} - set(table.dtype.names or ())
        if missing:
            raise ConfigurationError(f"Initial law '{path}' misses column(s) {sorted(missing)}")
        table = np.atleast_1d(table)
        return cls(table['x'], table['y'], table['weight'])

    @property
    def mean_capacity(self) -> float:
        return float(np.sum(self.weights * self.y))

    def sample(self, rng:np.random.Generator) -> tuple:
        atom = rng.choice(self.x.size, p=self.weights)
        return self.x[atom], self.y[atom]


def time_nodes(T:float, steps:int) -> np.ndarray:
    nodes = np.arange(steps + 1) * T / steps
    nodes[0], nodes[-1] = 0.0, T
    return nodes


def _simulate_block(c:InverseSurface, drift:np.ndarray, t:np.ndarray, sigma:float, law:InitialLaw, start,
                    seed:int, stream:int, first:int, last:int) -> PathBundle:
    """ Paths first..last-1; each path consumes its own generator (initial atom first, then the normals). """
    steps = t.size - 1
    dt = t[1] - t[0]
    x0, y0 = np.empty(last - first), np.empty(last - first)
    Z = np.empty((last - first, steps))
    for row, p in enumerate(range(first, last)):
        rng = path_rng(seed, stream, p)
        x0[row], y0[row] = law.sample(rng) if start is None else start
        Z[row] = rng.standard_normal(steps)

    X = np.empty((last - first, steps + 1))
    X[:, 0] = x0
    for i in range(steps):
        X[:, i + 1] = euler_step(X[:, i], drift[i], dt, Z[:, i], sigma)
    return reflect(X, t, y0, c, x0=x0, seed=seed, stream=stream)


def _blocks(n_paths:int, block_size:int) -> dict:
    return {
        blk: (first, min(first + block_size, n_paths))
            for blk, first in enumerate(range(0, n_paths, block_size))
    }


def _task_args(c, m, params, n_paths, seed, stream, steps, law, start, block_size) -> tuple:
    if int(n_paths) != n_paths or n_paths < 1:
        raise ConfigurationError(f"Path count must be an integer >= 1, got {n_paths}")
    if int(block_size) != block_size or block_size < 1:
        raise ConfigurationError(f"'block_size' must be an integer >= 1, got {block_size}")
    grid = c.grid
    steps = grid.l1 if steps is None else int(steps)
    if steps < 1:
        raise ConfigurationError(f"Path time steps must be >= 1, got {steps}")
    t = time_nodes(grid.T, steps)
    drift = np.interp(t[:-1], grid.t, m.values)
    law = InitialLaw.uniform(grid) if law is None else law
    return t, {
        blk: dict(c=c, drift=drift, t=t, sigma=params.sigma, law=law, start=start,
                  seed=seed, stream=stream, first=first, last=last)
            for blk, (first, last) in _blocks(int(n_paths), int(block_size)).items()
    }


def simulate_paths(c:InverseSurface, m:MeanField, params:ModelParams, n_paths:int, seed:int, stream:int=0,
                   steps:int=None, law:InitialLaw=None, start:tuple=None,
                   block_size:int=DEFAULT_BLOCK_SIZE, workers:int=1) -> PathBundle:
    """
    Simulate reflected paths on a grid of `steps` equal steps over [0, T] (the coarse grid by default),
    with drift m interpolated linearly in t and c interpolated linearly in t between coarse rows.
    `start` fixes (x0, y0-) for every path; otherwise it is drawn from `law` (uniform on the grid by default).
    """
    t, tasks = _task_args(c, m, params, n_paths, seed, stream, steps, law, start, block_size)
    blocks = execute_tasks(_simulate_block, tasks, workers)
    parts = list(blocks.values())
    return PathBundle(
        t=t,
        X=np.vstack([p.X for p in parts]),
        Y=np.vstack([p.Y for p in parts]),
        xi=np.vstack([p.xi for p in parts]),
        c_along=np.vstack([p.c_along for p in parts]),
        x0=np.concatenate([p.x0 for p in parts]),
        y0_minus=np.concatenate([p.y0_minus for p in parts]),
        seed=seed, stream=stream
    )


def _block_moments(**kwargs) -> tuple:
    paths = _simulate_block(**kwargs)
    # Sequential accumulation along the path axis keeps the reduction order fixed
    return np.add.accumulate(paths.Y, axis=0)[-1], np.add.accumulate(paths.Y ** 2, axis=0)[-1]


def estimate_mean_field(b:BoundarySurface, m_prev:MeanField, params:ModelParams, n_paths:int, seed:int,
                        stream:int=None, law:InitialLaw=None, block_size:int=DEFAULT_BLOCK_SIZE,
                        workers:int=1) -> MeanField:
    """
    m(t_i) = sample mean of Y_{t_i} over `n_paths` reflected paths driven by the drift `m_prev`
    and the target surface inverted from `b`. Bit-identical for any worker count.
    """
    c = invert_boundary(b)
    stream = b.n if stream is None else stream
    t, tasks = _task_args(c, m_prev, params, n_paths, seed, stream, None, law, None, block_size)
    moments = execute_tasks(_block_moments, tasks, workers)

    total, squares = np.zeros(t.size), np.zeros(t.size)
    for block_sum, block_squares in moments.values():
        total = total + block_sum
        squares = squares + block_squares
    mean = total / n_paths
    variance = np.maximum(squares / n_paths - mean ** 2, 0.0)
    logging.info(f"Mean field n={b.n}: {n_paths} paths, m(0)={mean[0]:.6f}, m(T)={mean[-1]:.6f}")
    return MeanField(np.clip(mean, 0.0, 1.0), b.grid, n=b.n, standard_error=np.sqrt(variance / n_paths))


def estimate_objective(paths:PathBundle, params:ModelParams, payoff:Payoff) -> tuple:
    """
    Monte Carlo estimate (mean, standard error) of E[∫ e^{-rt} f(X_t, Y_t) dt - c0 ∫ e^{-rt} dxi_t]
    on the simulation grid: left-point rule for the profit, each control increment discounted at its grid time.
    """
    dt = np.diff(paths.t)
    discount = np.exp(-params.r * paths.t)
    profit = payoff.profit(paths.X[:, :-1], paths.Y[:, :-1]) * (discount[:-1] * dt)
    cost = params.c0 * paths.increments * discount
    values = profit.sum(axis=1) - cost.sum(axis=1)
    error = values.std(ddof=1) / np.sqrt(values.size) if values.size > 1 else 0.0
    return float(values.mean()), float(error)
