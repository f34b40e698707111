"""Economic model of the capacity-expansion game: parameters, payoff, grids, terminal boundary and the
standard normal CDF shared by every Gaussian kernel.

The running profit is f(x, y) = exp(x) * g(y), so the marginal profit of capacity is
d/dy f(x, y) = exp(x) * g'(y). Only (g, g') enter the solver.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Callable
import logging

import numpy as np
from scipy.special import ndtr

from core.decorators import ConfigurationError


@dataclass(frozen=True)
class ModelParams:
    """ Discount rate r, unit investment cost c0, volatility sigma and horizon T. """
    r: float = 0.01
    c0: float = 0.5
    sigma: float = 1.0
    T: float = 1.0

    def __post_init__(self):
        for name in ('c0', 'sigma', 'T'):
            if not getattr(self, name) > 0:
                raise ConfigurationError(f"'{name}' must be > 0, got {getattr(self, name)}")
        if not self.r >= 0:
            raise ConfigurationError(f"'r' must be >= 0, got {self.r}")


@dataclass(frozen=True)
class Payoff:
    """ Profit level g(y) and marginal profit g'(y) on (0, 1]. """
    name: str
    g: Callable
    g_prime: Callable

    def validate(self, y:np.ndarray):
        """ g' must be positive and strictly decreasing on the sampled levels. """
        slope = np.asarray(self.g_prime(np.asarray(y, dtype=float)), dtype=float)
        if not np.all(np.isfinite(slope)) or np.any(slope <= 0):
            raise ConfigurationError(f"Payoff '{self.name}': g' must be finite and > 0 on the y-grid")
        if slope.size > 1 and np.any(np.diff(slope) >= 0):
            raise ConfigurationError(f"Payoff '{self.name}': g' must be strictly decreasing on the y-grid")
        return self

    def marginal_profit(self, x, y):
        """ d/dy f(x, y) = exp(x) g'(y). """
        return np.exp(x) * self.g_prime(y)

    def profit(self, x, y):
        return np.exp(x) * self.g(y)


def sqrt_payoff() -> Payoff:
    return Payoff('sqrt', g=np.sqrt, g_prime=lambda y: 0.5 / np.sqrt(y))

def power_payoff(alpha:float=0.5) -> Payoff:
    """ g(y) = y**alpha with 0 < alpha < 1 (strictly increasing and concave). """
    if not 0 < alpha < 1:
        raise ConfigurationError(f"'payoff_alpha' must lie in (0, 1), got {alpha}")
    return Payoff(
        f'power({alpha:g})',
        g=lambda y: np.power(y, alpha),
        g_prime=lambda y: alpha * np.power(y, alpha - 1.0)
    )

PAYOFFS = {
    'sqrt': lambda alpha=None: sqrt_payoff(),
    'power': lambda alpha=0.5: power_payoff(alpha),
}

def make_payoff(name:str, alpha:float=0.5) -> Payoff:
    if name not in PAYOFFS:
        raise ConfigurationError(f"Unknown payoff '{name}', valid: {', '.join(PAYOFFS)}")
    return PAYOFFS[name](alpha)


def _frozen(a:np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """
    Equally spaced partitions of [0, T] (l1 steps), [y0, 1] (l2 steps) and [x_min, x_max] (l3 steps).
    Nodes are rebuilt from their index so both endpoints are exact.
    """
    T: float = 1.0
    l1: int = 75
    l2: int = 50
    l3: int = 25
    y0: float = 1e-3
    x_min: float = -5.0
    x_max: float = 0.5

    def __post_init__(self):
        for name in ('l1', 'l2', 'l3'):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigurationError(f"'{name}' must be a positive integer, got {value}")
        if not 0 < self.y0 < 1:
            raise ConfigurationError(f"'y0' must lie in (0, 1), got {self.y0}")
        if not self.x_min < self.x_max:
            raise ConfigurationError(f"'x_min' must be < 'x_max', got [{self.x_min}, {self.x_max}]")
        if not self.T > 0:
            raise ConfigurationError(f"'T' must be > 0, got {self.T}")

    @property
    def dt(self) -> float:
        return self.T / self.l1

    @property
    def dy(self) -> float:
        return (1.0 - self.y0) / self.l2

    @property
    def dx(self) -> float:
        return (self.x_max - self.x_min) / self.l3

    @property
    def cell_weight(self) -> float:
        """ sqrt(dt dy): turns a node-sum 2-norm on the (t, y) grid into the L2 norm over [0, T] x [y0, 1]. """
        return float(np.sqrt(self.dt * self.dy))

    @cached_property
    def t(self) -> np.ndarray:
        nodes = np.arange(self.l1 + 1) * self.T / self.l1
        nodes[0], nodes[-1] = 0.0, self.T
        return _frozen(nodes)

    @cached_property
    def y(self) -> np.ndarray:
        nodes = self.y0 + np.arange(self.l2 + 1) * self.dy
        nodes[0], nodes[-1] = self.y0, 1.0
        return _frozen(nodes)

    @cached_property
    def x(self) -> np.ndarray:
        nodes = self.x_min + np.arange(self.l3 + 1) * self.dx
        nodes[0], nodes[-1] = self.x_min, self.x_max
        return _frozen(nodes)

    @property
    def shape(self) -> tuple:
        """ Shape of a (t, y) surface. """
        return (self.l1 + 1, self.l2 + 1)


def terminal_boundary(params:ModelParams, payoff:Payoff, y):
    """
    Level x̄(y) solving d/dy f(x̄, y) = r c0, i.e. x̄(y) = log(r c0) - log(g'(y)).
    Works element-wise on arrays.
    """
    if params.r <= 0:
        raise ConfigurationError("Terminal boundary undefined for r = 0 (x̄ = -inf); use r > 0")
    slope = np.asarray(payoff.g_prime(np.asarray(y, dtype=float)), dtype=float)
    if np.any(slope <= 0):
        raise ConfigurationError(f"Payoff '{payoff.name}': g'(y) must be > 0 for the terminal boundary")
    x_bar = np.log(params.r * params.c0) - np.log(slope)
    logging.debug(f"Terminal boundary on {x_bar.size} level(s), range [{np.min(x_bar):.4f}, {np.max(x_bar):.4f}]")
    return float(x_bar) if x_bar.ndim == 0 else x_bar


def normal_cdf(z):
    """ Standard normal CDF Φ, total on [-inf, inf], erfc-based (absolute error ~1e-16). """
    return ndtr(z)
