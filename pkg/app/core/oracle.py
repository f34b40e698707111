"""Backward dynamic programming for the optimal stopping problem at a fixed capacity level.

For fixed y the value u(t, x) solves

    u(t, x) = min(c0, e^x g'(y) dt + e^{-r dt} E[u(t + dt, x + m(t) dt + sigma sqrt(dt) Z)]),   u(T, .) = c0,

with the expectation by Gauss-Hermite quadrature and linear interpolation in x. The stopping boundary
is the first x where u reaches c0. Used only to cross-check the integral-equation boundary.
"""

from dataclasses import dataclass
import logging

import numpy as np
from numpy.polynomial.hermite_e import hermegauss

from core.auxiliary import execute_tasks
from core.decorators import ConfigurationError, OracleRangeError
from core.model import ModelParams, Payoff, terminal_boundary
from core.volterra import BoundarySurface, MeanField

STOP_TOL = 1e-12


def gauss_hermite(order:int=7) -> tuple:
    """ Nodes and weights of E[h(Z)], Z ~ N(0, 1); the weights sum to one. """
    if int(order) != order or order < 1:
        raise ConfigurationError(f"'oracle_order' must be an integer >= 1, got {order}")
    z, w = hermegauss(int(order))
    return z, w / w.sum()


@dataclass
class OracleGrid:
    """ Fine (t, x) lattice around x̄(y) for one capacity level y. """
    nt: int
    nx: int
    y: float
    m: MeanField
    x_lo: float
    x_hi: float
    T: float

    def __post_init__(self):
        if self.nt < 1 or self.nx < 3:
            raise ConfigurationError(f"Oracle grid needs nt >= 1 and nx >= 3, got nt={self.nt}, nx={self.nx}")
        if not 0 < self.y <= 1:
            raise ConfigurationError(f"Oracle level y must lie in (0, 1], got {self.y}")

    @classmethod
    def around(cls, params:ModelParams, payoff:Payoff, y:float, m:MeanField, nt:int=300, nx:int=600,
               width:float=6.0) -> 'OracleGrid':
        """ x-range x̄(y) ± width sigma sqrt(T). """
        centre = terminal_boundary(params, payoff, y)
        half = width * params.sigma * np.sqrt(params.T)
        return cls(int(nt), int(nx), float(y), m, centre - half, centre + half, params.T)

    @property
    def t(self) -> np.ndarray:
        nodes = np.arange(self.nt + 1) * self.T / self.nt
        nodes[-1] = self.T
        return nodes

    @property
    def x(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.nx)

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / (self.nx - 1)

    def drift(self) -> np.ndarray:
        """ Coarse mean field held constant on each coarse step, sampled at the fine times. """
        coarse = self.m.grid
        index = np.minimum(np.floor(self.t[:-1] / coarse.dt + 1e-9).astype(int), coarse.l1)
        return self.m.values[index]

    def covers(self, curve:np.ndarray, margin:float) -> bool:
        return bool(np.min(curve) - margin >= self.x_lo and np.max(curve) + margin <= self.x_hi)


def solve_os_backward(og:OracleGrid, params:ModelParams, payoff:Payoff, order:int=7) -> tuple:
    """ Value matrix u (nt+1, nx) and boundary curve b̂(t) (nt+1,), b̂(T) = x̄(y). """
    u = backward_values(og, params, payoff, order=order)
    return u, stopping_boundary(u, og, params, payoff)


def backward_values(og:OracleGrid, params:ModelParams, payoff:Payoff, order:int=7) -> np.ndarray:
    slope = float(payoff.g_prime(og.y))
    if not slope > 0:
        raise ConfigurationError(f"Payoff '{payoff.name}': g'({og.y}) must be > 0")
    z, w = gauss_hermite(order)
    x, dt = og.x, og.T / og.nt
    drift = og.drift()
    running = slope * np.exp(x) * dt
    discount = np.exp(-params.r * dt)

    u = np.empty((og.nt + 1, og.nx))
    u[og.nt] = params.c0
    for i in range(og.nt - 1, -1, -1):
        moved = x[:, None] + drift[i] * dt + params.sigma * np.sqrt(dt) * z[None, :]
        continuation = np.interp(moved, x, u[i + 1]) @ w
        u[i] = np.minimum(params.c0, running + discount * continuation)
    return u


def stopping_boundary(u:np.ndarray, og:OracleGrid, params:ModelParams, payoff:Payoff) -> np.ndarray:
    x = og.x
    b_hat = np.empty(og.nt + 1)
    for i in range(og.nt):
        b_hat[i] = _stopping_level(u[i], x, params.c0, og, i)
    b_hat[og.nt] = terminal_boundary(params, payoff, og.y)
    logging.debug(f"Oracle y={og.y}: b_hat in [{b_hat.min():.4f}, {b_hat.max():.4f}], x-range [{og.x_lo:.4f}, {og.x_hi:.4f}]")
    return b_hat


def _stopping_level(row:np.ndarray, x:np.ndarray, c0:float, og:OracleGrid, i:int) -> float:
    """ First x with u >= c0 - STOP_TOL, refined linearly between the bracketing nodes. """
    target = c0 - STOP_TOL
    stopped = np.nonzero(row >= target)[0]
    if stopped.size == 0 or stopped[0] == 0:
        where = 'above' if stopped.size == 0 else 'below'
        raise OracleRangeError(
            f"Oracle boundary at y={og.y}, t={og.t[i]:.4f} lies {where} the x-range "
            f"[{og.x_lo:.4f}, {og.x_hi:.4f}]; enlarge the range"
        )
    k = stopped[0]
    lower, upper = row[k - 1], row[k]
    if upper <= lower:
        return float(x[k])
    return float(x[k - 1] + (target - lower) / (upper - lower) * (x[k] - x[k - 1]))


def compare_boundaries(b_picard_slice, b_oracle_curve, tol:float, t=None, oracle_t=None) -> dict:
    """
    Sup-norm gap between a coarse boundary slice and an oracle curve over the coarse times,
    leaving out T and the last coarse step before it. With `t` and `oracle_t` the oracle curve is
    interpolated onto `t` first.
    """
    coarse = np.asarray(b_picard_slice, dtype=float)
    oracle = np.asarray(b_oracle_curve, dtype=float)
    if oracle_t is not None:
        oracle = np.interp(t, oracle_t, oracle)
    if oracle.shape != coarse.shape:
        raise ConfigurationError(f"Boundary curves differ in length ({coarse.size} vs {oracle.size})")
    gap = np.abs(coarse - oracle)[:max(coarse.size - 2, 1)]
    deviation = float(gap.max())
    return {'max_deviation': deviation, 'tolerance': float(tol), 'passed': bool(deviation <= tol)}


def _oracle_slice(b:BoundarySurface, m:MeanField, params:ModelParams, payoff:Payoff, y:float,
                  nt:int, nx:int, order:int, tol_steps:float) -> dict:
    og = OracleGrid.around(params, payoff, y, m, nt=nt, nx=nx)
    _, b_hat = solve_os_backward(og, params, payoff, order=order)
    coarse = b.slice_at(y)
    comparison = compare_boundaries(coarse, b_hat, tol_steps * og.dx, t=b.grid.t, oracle_t=og.t)
    logging.info(f"Oracle y={y}: deviation {comparison['max_deviation']:.3e} (tolerance {comparison['tolerance']:.3e})")
    return {'y': float(y), 'fine_dx': og.dx, **comparison, 't': og.t, 'b_hat': b_hat}


def oracle_check(b:BoundarySurface, m:MeanField, params:ModelParams, payoff:Payoff, slices=(0.25, 0.5, 1.0),
                 nt:int=300, nx:int=600, order:int=7, tol_steps:float=2, workers:int=1) -> list:
    """ Cross-check `b` (solved with drift `m`) against the oracle on each requested y-slice. """
    results = execute_tasks(_oracle_slice, {
        y: dict(b=b, m=m, params=params, payoff=payoff, y=y, nt=nt, nx=nx, order=order, tol_steps=tol_steps)
            for y in slices
    }, workers)
    return list(results.values())
