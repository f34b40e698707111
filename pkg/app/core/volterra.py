"""Gaussian kernels of the boundary integral equation and the Picard fixed-point solver.

For a mean field m (a function of time only) the state X drifts by M(s) = ∫ m and diffuses with
constant sigma, so every expectation in the integral equation has a closed form in Φ. On the grid
the equation for b(t_i, y_j) reads

    b = log c0 + log A - log g'(y_j) - log I2,    A = H - r I1,

with H the horizon term (1 - exp(-r (T - t_i)), or its quadrature counterpart), I1 the discounted
probability of sitting above the boundary and I2 the discounted exponential moment below it.
"""

from dataclasses import dataclass, field, replace
from typing import NamedTuple
import logging

import numpy as np
from scipy.integrate import cumulative_trapezoid

from core.auxiliary import execute_tasks, frobenius
from core.decorators import ConfigurationError, DegenerateBoundaryError
from core.model import Grid, ModelParams, Payoff, normal_cdf, terminal_boundary

QUADRATURES = ('rectangle', 'trapezoid')
HORIZONS = ('quadrature', 'exact')
A_CLAMP = 1e-12
MAX_CLAMPED_FRACTION = 0.01


def cumulative_drift(values, grid:Grid) -> np.ndarray:
    """ Trapezoid integral M_i = ∫_0^{t_i} m(u) du with M_0 = 0. """
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.l1 + 1,):
        raise ConfigurationError(f"Mean field has {values.size} values, the time grid has {grid.l1 + 1} nodes")
    return cumulative_trapezoid(values, dx=grid.dt, initial=0.0)


@dataclass
class MeanField:
    """ Mean capacity m(t_i) in [0, 1] with its cumulative integral. """
    values: np.ndarray
    grid: Grid
    n: int = -1                             # game iteration that produced it
    standard_error: np.ndarray = None       # Monte Carlo standard error, if estimated
    cumulative: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if not np.all(np.isfinite(values)) or np.any(values < 0) or np.any(values > 1):
            raise ConfigurationError("Mean field values must lie in [0, 1]")
        self.cumulative = cumulative_drift(values, self.grid)
        self.values = values

    @classmethod
    def constant(cls, grid:Grid, level:float=1.0, n:int=-1) -> 'MeanField':
        return cls(np.full(grid.l1 + 1, float(level)), grid, n=n)


@dataclass
class BoundarySurface:
    """ Free boundary b(t_i, y_j) in log-price units, tagged with game index n and Picard index k. """
    values: np.ndarray
    grid: Grid
    n: int = 0
    k: int = 0
    degenerate: np.ndarray = None           # nodes where A was clamped
    a_values: np.ndarray = None             # A at every node of the update that produced it

    def __post_init__(self):
        self.values = np.array(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ConfigurationError(f"Boundary shape {self.values.shape} does not match the grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ConfigurationError("Boundary surface has non-finite entries")
        if self.degenerate is None:
            self.degenerate = np.zeros(self.grid.shape, dtype=bool)

    @classmethod
    def terminal(cls, grid:Grid, params:ModelParams, payoff:Payoff, n:int=0) -> 'BoundarySurface':
        """ Cold start: every row equal to x̄(y). """
        x_bar = terminal_boundary(params, payoff, grid.y)
        return cls(np.tile(x_bar, (grid.l1 + 1, 1)), grid, n=n, k=0)

    @property
    def is_degenerate(self) -> bool:
        return bool(self.degenerate.any())

    def retag(self, n:int=None, k:int=None) -> 'BoundarySurface':
        return replace(
            self,
            values=self.values.copy(),
            n=self.n if n is None else n,
            k=self.k if k is None else k,
        )

    def slice_at(self, y:float) -> np.ndarray:
        """ Boundary t -> b(t, y), linear in y between grid levels. """
        return np.array([np.interp(y, self.grid.y, row) for row in self.values])

    def violations(self) -> tuple:
        """ Largest increase in t and largest decrease in y between neighbouring nodes. """
        t_up = np.diff(self.values, axis=0)
        y_down = -np.diff(self.values, axis=1)
        t_violation = float(max(t_up.max(initial=0.0), 0.0))
        y_violation = float(max(y_down.max(initial=0.0), 0.0))
        return t_violation, y_violation


class PicardSolution(NamedTuple):
    surface: BoundarySurface
    errors: list        # ||b^(k) - b^(k-1)||_2 for k = 1..k_hat
    iterates: list      # b^(0), ..., b^(k_hat)


def quadrature_weights(count:int, dt:float, rule:str='rectangle') -> np.ndarray:
    """ Weights on s_q = q dt, q = 0..count-1. """
    if rule not in QUADRATURES:
        raise ConfigurationError(f"Unknown quadrature '{rule}', valid: {', '.join(QUADRATURES)}")
    weights = np.full(count, dt)
    if rule == 'trapezoid' and count > 1:
        weights[0] = weights[-1] = 0.5 * dt
    return weights


def _beta_block(values:np.ndarray, i:int, M:np.ndarray, sigma:float, dt:float) -> tuple:
    """ Lags s_q, drift increments and beta(s_q) for q = 0..l1-i; beta has one column per y-level. """
    count = values.shape[0] - i
    s = np.arange(count) * dt
    dM = M[i:] - M[i]
    numerator = values[i:] - values[i] - dM[:, None]
    beta = np.zeros_like(numerator)
    beta[1:] = numerator[1:] / (sigma * np.sqrt(s[1:]))[:, None]
    return s, dM, beta


def beta(b:BoundarySurface, i:int, q:int, j:int, M:np.ndarray, sigma:float) -> float:
    """ Standardized distance (b(t_{i+q}) - b(t_i) - ΔM) / (sigma sqrt(q dt)); zero at q = 0. """
    l1 = b.grid.l1
    if not (0 <= i <= l1 and 0 <= q <= l1 - i):
        raise IndexError(f"beta needs 0 <= i <= i + q <= {l1}, got i={i}, q={q}")
    if q == 0:
        return 0.0
    s = q * b.grid.dt
    return float((b.values[i + q, j] - b.values[i, j] - (M[i + q] - M[i])) / (sigma * np.sqrt(s)))


def _kernels(values:np.ndarray, i:int, M:np.ndarray, params:ModelParams, dt:float, rule:str) -> tuple:
    """ (I1, I2, H_quadrature) at time index i for every column of `values`. """
    s, dM, b = _beta_block(values, i, M, params.sigma, dt)
    w = quadrature_weights(s.size, dt, rule)[:, None]
    discount = np.exp(-params.r * s)[:, None]
    growth = np.exp(dM + 0.5 * params.sigma ** 2 * s - params.r * s)[:, None]
    I1 = np.sum(w * discount * (1.0 - normal_cdf(b)), axis=0)
    I2 = np.sum(w * growth * normal_cdf(b - params.sigma * np.sqrt(s)[:, None]), axis=0)
    H = params.r * float(np.sum(w[:, 0] * discount[:, 0]))
    return I1, I2, H


def kernel_I1(b:BoundarySurface, i:int, j:int, M:np.ndarray, params:ModelParams, quadrature:str='rectangle') -> float:
    """ Σ_q w_q exp(-r s_q) (1 - Φ(beta_q)); zero on the empty horizon i = l1. """
    if i >= b.grid.l1:
        return 0.0
    I1, _, _ = _kernels(b.values[:, j:j + 1], i, M, params, b.grid.dt, quadrature)
    return float(I1[0])


def kernel_I2(b:BoundarySurface, i:int, j:int, M:np.ndarray, params:ModelParams, quadrature:str='rectangle') -> float:
    """ Σ_q w_q exp(ΔM_q + sigma² s_q / 2 - r s_q) Φ(beta_q - sigma sqrt(s_q)); zero at i = l1. """
    if i >= b.grid.l1:
        return 0.0
    _, I2, _ = _kernels(b.values[:, j:j + 1], i, M, params, b.grid.dt, quadrature)
    return float(I2[0])


def horizon_term(params:ModelParams, grid:Grid, i:int, quadrature:str='rectangle', horizon:str='quadrature') -> float:
    """ r ∫_0^{T - t_i} exp(-r s) ds, exactly or with the kernel quadrature. """
    if horizon not in HORIZONS:
        raise ConfigurationError(f"Unknown horizon rule '{horizon}', valid: {', '.join(HORIZONS)}")
    if i >= grid.l1:
        return 0.0
    if horizon == 'exact':
        return float(-np.expm1(-params.r * (grid.T - grid.t[i])))
    s = np.arange(grid.l1 - i + 1) * grid.dt
    return params.r * float(np.sum(quadrature_weights(s.size, grid.dt, quadrature) * np.exp(-params.r * s)))


def _update_row(values, i, M, params, log_slope, grid, quadrature, horizon) -> tuple:
    I1, I2, H_quad = _kernels(values, i, M, params, grid.dt, quadrature)
    H = H_quad if horizon == 'quadrature' else horizon_term(params, grid, i, quadrature, 'exact')
    A = H - params.r * I1
    clamped = A <= 0
    row = np.log(params.c0) + np.log(np.where(clamped, A_CLAMP, A)) - log_slope - np.log(I2)
    return row, A, clamped


def picard_update(b_k:BoundarySurface, m:MeanField, params:ModelParams, payoff:Payoff,
                  quadrature:str='rectangle', horizon:str='quadrature', workers:int=1) -> BoundarySurface:
    """
    One application of the integral-equation map. Rows are computed independently from b_k
    into a fresh surface; the terminal row is copied unchanged.
    """
    grid = b_k.grid
    if m.grid != grid:
        raise ConfigurationError("Boundary and mean field live on different grids")
    if horizon not in HORIZONS:
        raise ConfigurationError(f"Unknown horizon rule '{horizon}', valid: {', '.join(HORIZONS)}")
    log_slope = np.log(payoff.g_prime(grid.y))
    rows = execute_tasks(_update_row, {
        i: dict(values=b_k.values, i=i, M=m.cumulative, params=params, log_slope=log_slope,
                grid=grid, quadrature=quadrature, horizon=horizon)
            for i in range(grid.l1)
    }, workers)

    values = np.empty(grid.shape)
    a_values = np.full(grid.shape, np.nan)
    degenerate = np.zeros(grid.shape, dtype=bool)
    for i, (row, A, clamped) in rows.items():
        values[i], a_values[i], degenerate[i] = row, A, clamped
    values[grid.l1] = b_k.values[grid.l1]

    if degenerate.any():
        nodes = [(int(i), int(j), float(a_values[i, j])) for i, j in zip(*np.nonzero(degenerate))]
        fraction = len(nodes) / (grid.l1 * (grid.l2 + 1))
        logging.warning(f"A <= 0 at {len(nodes)} node(s) (n={b_k.n}, k={b_k.k + 1}), clamped to {A_CLAMP}: {nodes[:10]}")
        if fraction > MAX_CLAMPED_FRACTION:
            raise DegenerateBoundaryError(
                f"A <= 0 at {len(nodes)} of {grid.l1 * (grid.l2 + 1)} interior nodes ({fraction:.2%}); "
                f"first (i, j, A): {nodes[:5]}",
                nodes=nodes
            )
    return BoundarySurface(values, grid, n=b_k.n, k=b_k.k + 1, degenerate=degenerate, a_values=a_values)


def solve_picard(b_init:BoundarySurface, m:MeanField, params:ModelParams, payoff:Payoff,
                 eta:float=1e-3, k_max:int=5, quadrature:str='rectangle', horizon:str='quadrature',
                 workers:int=1) -> PicardSolution:
    """ Iterate the integral-equation map until ||b^(k) - b^(k-1)||_2 < eta or k = k_max. """
    if not eta > 0:
        raise ConfigurationError(f"'eta' must be > 0, got {eta}")
    if int(k_max) != k_max or k_max < 1:
        raise ConfigurationError(f"'k_max' must be an integer >= 1, got {k_max}")

    b = b_init.retag(k=0)
    errors, iterates = [], [b]
    degenerate = b.degenerate.copy()
    for _ in range(int(k_max)):
        b_next = picard_update(b, m, params, payoff, quadrature=quadrature, horizon=horizon, workers=workers)
        err = frobenius(b_next.values, b.values)
        errors.append(err)
        degenerate |= b_next.degenerate
        logging.info(f"Picard n={b.n} k={b_next.k}: error {err:.3e}")
        b = b_next
        iterates.append(b)
        if err < eta:
            break
    b.degenerate = degenerate
    return PicardSolution(b, errors, iterates)


def isotonic_projection(b:BoundarySurface) -> BoundarySurface:
    """ Running max over y, then backward running max over t (non-increasing in t, terminal row kept). """
    values = np.maximum.accumulate(b.values, axis=1)
    values = np.maximum.accumulate(values[::-1], axis=0)[::-1]
    return replace(b, values=values.copy())


def action_region(b:BoundarySurface, i:int, x:float, j:int) -> bool:
    """ True when (t_i, x, y_j) lies in the action (stopping) set x >= b(t_i, y_j). """
    return bool(x >= b.values[i, j])


def eval_value_function(i:int, x:float, j:int, b:BoundarySurface, m:MeanField, params:ModelParams, payoff:Payoff,
                        quadrature:str='rectangle', horizon:str='quadrature') -> float:
    """
    u(t_i, x, y_j) from its Gaussian representation:
        u = c0 (1 - H) + g'(y) e^x Σ w exp(ΔM + sigma² s / 2 - r s) Φ(β̃ - sigma sqrt(s)) + r c0 Σ w e^{-rs} (1 - Φ(β̃))
    with β̃(s) = (b(t_i + s, y) - x - ΔM(s)) / (sigma sqrt(s)). At x = b(t_i, y_j) the sums are the Picard kernels.
    """
    grid = b.grid
    if i >= grid.l1:
        return params.c0
    column = b.values[:, j]
    s, dM, _ = _beta_block(column[:, None], i, m.cumulative, params.sigma, grid.dt)
    bt = np.empty(s.size)
    bt[1:] = (column[i + 1:] - x - dM[1:]) / (params.sigma * np.sqrt(s[1:]))
    bt[0] = np.inf if x < column[i] else (0.0 if x == column[i] else -np.inf)

    w = quadrature_weights(s.size, grid.dt, quadrature)
    discount = np.exp(-params.r * s)
    I1 = np.sum(w * discount * (1.0 - normal_cdf(bt)))
    I2 = np.sum(w * np.exp(dM + 0.5 * params.sigma ** 2 * s - params.r * s) * normal_cdf(bt - params.sigma * np.sqrt(s)))
    H = horizon_term(params, grid, i, quadrature, horizon)
    return float(params.c0 * (1.0 - H) + payoff.g_prime(grid.y[j]) * np.exp(x) * I2 + params.r * params.c0 * I1)
