from dataclasses import dataclass, field
from typing import NamedTuple
import logging

import numpy as np

from core.meanfield import ACTIVE_TOL, PathBundle
from core.model import ModelParams, Payoff, terminal_boundary
from core.volterra import (BoundarySurface, MeanField, action_region, eval_value_function, picard_update)

MONOTONE_TOL = 5e-3
FEASIBILITY_TOL = 1e-10


class Residual(NamedTuple):
    matrix: np.ndarray      # |update(b*) - b*| on interior rows
    norm_inf: float
    norm_2: float


@dataclass
class DiagnosticsReport:
    """ Scalar and matrix checks of a converged (b*, m†) pair. """
    residual: np.ndarray
    norm_inf: float
    norm_2: float
    skorokhod: dict = field(default_factory=dict)
    monotonicity: dict = field(default_factory=dict)
    smooth_fit: dict = field(default_factory=dict)
    separability_gap: float = 0.0
    uniqueness: dict = field(default_factory=dict)
    objective: dict = field(default_factory=dict)
    degenerate_nodes: int = 0
    oracle: list = field(default_factory=list)
    representative: PathBundle = None
    batch: PathBundle = None

    def to_dict(self) -> dict:
        """ Scalar entries for the JSON report. """
        out = {
            'norm_inf': self.norm_inf,
            'norm_2': self.norm_2,
            'skorokhod': self.skorokhod,
            'monotonicity': self.monotonicity,
            'smooth_fit': self.smooth_fit,
            'separability_gap': self.separability_gap,
            'uniqueness': self.uniqueness,
            'objective': self.objective,
            'degenerate_nodes': self.degenerate_nodes,
        }
        if self.oracle:
            out['oracle'] = [{k: v for k, v in s.items() if k not in ('t', 'b_hat')} for s in self.oracle]
        return out


def residual(b_star:BoundarySurface, m_dag:MeanField, params:ModelParams, payoff:Payoff,
             quadrature:str='rectangle', horizon:str='quadrature', workers:int=1) -> Residual:
    """ R = |update(b*; m†) - b*| over interior times; the terminal row is pinned and left out. """
    updated = picard_update(b_star, m_dag, params, payoff, quadrature=quadrature, horizon=horizon, workers=workers)
    l1 = b_star.grid.l1
    R = np.abs(updated.values[:l1] - b_star.values[:l1])
    return Residual(R, float(R.max(initial=0.0)), float(np.sqrt(np.sum(R ** 2))))


def skorokhod_check(paths, tol_active:float=ACTIVE_TOL, tol_feas:float=FEASIBILITY_TOL) -> dict:
    """
    Feasibility G_t = Y_t - c(t, X_t) >= 0 on every step and complementarity G_t = 0 where the control moves.
    Accepts one PathBundle or a sequence of them; reduction runs in path order.
    """
    bundles = [paths] if isinstance(paths, PathBundle) else list(paths)
    G = np.vstack([p.gap for p in bundles])
    active = np.vstack([np.diff(p.xi, axis=1, prepend=0.0) > tol_active for p in bundles])
    n_active = int(active.sum())
    if n_active == 0:
        logging.warning("Skorokhod check: the control never acts on the diagnostic batch")
    stats = {
        'max_abs_G_on_active_set': float(np.abs(G[active]).max()) if n_active else 0.0,
        'min_G': float(G.min()),
        'n_active_steps': n_active,
        'empty_active_set': n_active == 0,
        'feasible': bool(G.min() >= -tol_feas),
    }
    logging.info(f"Skorokhod check: {stats}")
    return stats


def smooth_fit_probe(b_star:BoundarySurface, m_dag:MeanField, params:ModelParams, payoff:Payoff,
                     probe_offsets=None, quadrature:str='rectangle', horizon:str='quadrature') -> dict:
    """
    Evaluate u at x = b(t_i, y_j) and at b ± h for every interior node. Reports max |u(b) - c0|,
    max |u(b + h) - c0| and the largest one-sided slope (u(b) - u(b - h)) / h from below.
    """
    grid = b_star.grid
    offsets = [grid.dx] if probe_offsets is None else list(probe_offsets)
    deviation, above, slope = 0.0, 0.0, 0.0
    in_action, in_continuation = 0, 0
    for i in range(grid.l1):
        for j in range(grid.l2 + 1):
            boundary = b_star.values[i, j]
            u = lambda x: eval_value_function(i, x, j, b_star, m_dag, params, payoff, quadrature, horizon)
            u_b = u(boundary)
            deviation = max(deviation, abs(u_b - params.c0))
            for h in offsets:
                up, down = boundary + h, boundary - h
                in_action += action_region(b_star, i, up, j)
                in_continuation += not action_region(b_star, i, down, j)
                above = max(above, abs(u(up) - params.c0))
                slope = max(slope, abs(u_b - u(down)) / h)
    return {
        'max_abs_deviation': float(deviation),
        'max_abs_deviation_above': float(above),
        'max_abs_slope_below': float(slope),
        'probe_offsets': [float(h) for h in offsets],
        'probes_in_action_region': int(in_action),
        'probes_in_continuation_region': int(in_continuation),
    }


def monotonicity_audit(b:BoundarySurface) -> dict:
    """ Largest (b(t_{i+1}, y) - b(t_i, y))^+ and (b(t, y_j) - b(t, y_{j+1}))^+. """
    t_violation, y_violation = b.violations()
    if max(t_violation, y_violation) > MONOTONE_TOL:
        logging.warning(f"Boundary n={b.n}: monotonicity violations t={t_violation:.3e}, y={y_violation:.3e}")
    return {'t_violation': t_violation, 'y_violation': y_violation}


def separability_gap(b:BoundarySurface, params:ModelParams, payoff:Payoff) -> float:
    """ max_t of the spread across y of b(t, y) - x̄(y); zero when the boundary is x̄(y) plus a time shift. """
    shift = b.values - terminal_boundary(params, payoff, b.grid.y)
    return float(np.max(shift.max(axis=1) - shift.min(axis=1)))


def uniqueness_class_audit(b:BoundarySurface, params:ModelParams, payoff:Payoff, tol:float=MONOTONE_TOL) -> dict:
    """ Terminal pin error and largest shortfall (x̄(y) - b(t, y))^+ of the boundary below its terminal level. """
    x_bar = terminal_boundary(params, payoff, b.grid.y)
    pin_error = float(np.max(np.abs(b.values[-1] - x_bar)))
    shortfall = float(np.max(np.maximum(x_bar - b.values, 0.0)))
    return {
        'terminal_pin_error': pin_error,
        'max_shortfall': shortfall,
        'in_class': bool(pin_error == 0.0 and shortfall <= tol),
    }


def report_summary(report:DiagnosticsReport) -> dict:
    """ The headline numbers next to their reference values. """
    return {
        'norm_inf': (report.norm_inf, 2.69e-4),
        'norm_2': (report.norm_2, 8.82e-5),
        'max_abs_G_on_active_set': (report.skorokhod.get('max_abs_G_on_active_set'), 1e-9),
        'min_G': (report.skorokhod.get('min_G'), 1e-12),
    }
