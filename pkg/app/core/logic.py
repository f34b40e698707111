import logging

import numpy as np

from core.config import RunConfig, load_config
from core.decorators import reset_timings, stage
from core.diagnostics import (DiagnosticsReport, monotonicity_audit, report_summary, residual, separability_gap,
                              skorokhod_check, smooth_fit_probe, uniqueness_class_audit)
from core.manager import GameManager, GameState
from core.meanfield import estimate_objective, invert_boundary, simulate_paths
from core.oracle import oracle_check

# Random streams of the diagnostic simulations, away from the game iterations' streams 0..n_max
DIAGNOSTIC_STREAM = 1_000_000
REPRESENTATIVE_STREAM = 1_000_001

ACCEPTANCE = {
    'norm_inf': 1e-3,
    'norm_2': 5e-4,
    'max_abs_G_on_active_set': 1e-8,
    'min_G': -1e-10,
    'picard_final_err': 1e-3,
    'picard_not_decreasing': 0,
    'game_final_err': 1e-3,
    'game_inversions': 1,
    'monotonicity': 5e-3,
}


@stage('game')
def solve_game(manager:GameManager) -> GameState:
    return manager.run()


@stage('diagnostics')
def run_diagnostics(manager:GameManager, state:GameState) -> DiagnosticsReport:
    """ Residual, Skorokhod, smooth-fit and structural checks of (b*, m†). """
    config, params, payoff = manager.config, manager.params, manager.payoff
    b_star, m_dag = state.b_current, state.m_dagger
    res = residual(b_star, m_dag, params, payoff, quadrature=config.quadrature, horizon=config.horizon,
                   workers=config.workers)
    logging.info(f"Residual: ||R||_inf = {res.norm_inf:.3e}, ||R||_2 = {res.norm_2:.3e}")

    c = invert_boundary(b_star)
    batch = simulate_paths(
        c, m_dag, params, n_paths=config.diag_paths, seed=config.seed, stream=DIAGNOSTIC_STREAM,
        steps=config.diag_steps, law=manager.law, block_size=config.block_size, workers=config.workers
    )
    representative = simulate_paths(
        c, m_dag, params, n_paths=1, seed=config.seed, stream=REPRESENTATIVE_STREAM,
        steps=config.path_steps, start=(config.path_x0, config.path_y0)
    )
    objective, objective_se = estimate_objective(batch, params, payoff)

    return DiagnosticsReport(
        residual=res.matrix,
        norm_inf=res.norm_inf,
        norm_2=res.norm_2,
        skorokhod=skorokhod_check(batch),
        monotonicity=monotonicity_audit(b_star),
        smooth_fit=smooth_fit_probe(b_star, m_dag, params, payoff, quadrature=config.quadrature, horizon=config.horizon),
        separability_gap=separability_gap(b_star, params, payoff),
        uniqueness=uniqueness_class_audit(b_star, params, payoff),
        objective={'mean': objective, 'standard_error': objective_se},
        degenerate_nodes=int(b_star.degenerate.sum()),
        representative=representative,
        batch=batch,
    )


@stage('oracle')
def run_oracle(manager:GameManager, state:GameState) -> list:
    """ First game iteration (solved with m = 1) against backward dynamic programming. """
    config = manager.config
    return oracle_check(
        state.boundaries[0], state.drivers[0], manager.params, manager.payoff,
        slices=config.oracle_slices, nt=config.oracle_nt, nx=config.oracle_nx,
        order=config.oracle_order, tol_steps=config.oracle_tol_steps, workers=config.workers
    )


def run_game(config:RunConfig) -> tuple:
    """ Game iteration followed by the diagnostic suite; returns (GameState, DiagnosticsReport). """
    reset_timings()
    manager = GameManager(config)
    state = solve_game(manager)
    report = run_diagnostics(manager, state)
    if config.oracle_check:
        report.oracle = run_oracle(manager, state)
    return state, report


def _not_decreasing(errors:list, steps:int=3) -> bool:
    return bool(np.any(np.diff(errors[:steps]) >= 0))


def acceptance_metrics(state:GameState, report:DiagnosticsReport) -> dict:
    """
    (value, bound, passed) of every acceptance bound that applies to this run. Bounds on boundary
    distances are checked in the L2 norm over [0, T] x [y0, 1]; the stopping rules and the
    convergence tables keep the node-sum norm.
    """
    weight = state.b_current.grid.cell_weight
    picard_final = max(errors[-1] for errors in state.picard_errors) * weight
    # Cold start and last game iteration
    not_decreasing = sum(_not_decreasing(state.picard_errors[n]) for n in sorted({0, state.n}))
    violation = max(report.monotonicity.values())
    metrics = {
        'norm_inf': (report.norm_inf, ACCEPTANCE['norm_inf'], report.norm_inf <= ACCEPTANCE['norm_inf']),
        'norm_2': (report.norm_2, ACCEPTANCE['norm_2'], report.norm_2 <= ACCEPTANCE['norm_2']),
        'max_abs_G_on_active_set': (
            report.skorokhod['max_abs_G_on_active_set'], ACCEPTANCE['max_abs_G_on_active_set'],
            report.skorokhod['max_abs_G_on_active_set'] <= ACCEPTANCE['max_abs_G_on_active_set']
        ),
        'min_G': (report.skorokhod['min_G'], ACCEPTANCE['min_G'], report.skorokhod['min_G'] >= ACCEPTANCE['min_G']),
        'picard_final_err': (picard_final, ACCEPTANCE['picard_final_err'], picard_final < ACCEPTANCE['picard_final_err']),
        'picard_not_decreasing': (
            not_decreasing, ACCEPTANCE['picard_not_decreasing'], not_decreasing <= ACCEPTANCE['picard_not_decreasing']
        ),
        'monotonicity': (violation, ACCEPTANCE['monotonicity'], violation <= ACCEPTANCE['monotonicity']),
    }
    if state.game_errors:
        game_final = state.game_errors[-1] * weight
        metrics['game_final_err'] = (game_final, ACCEPTANCE['game_final_err'], game_final < ACCEPTANCE['game_final_err'])
    if len(state.game_errors) > 1:
        inversions = int(np.sum(np.diff(state.game_errors) > 0))
        metrics['game_inversions'] = (inversions, ACCEPTANCE['game_inversions'], inversions <= ACCEPTANCE['game_inversions'])
    for s in report.oracle:
        metrics[f"oracle_y{s['y']:g}"] = (s['max_deviation'], s['tolerance'], s['passed'])
    return {name: (float(value), float(bound), bool(passed)) for name, (value, bound, passed) in metrics.items()}


def acceptance_checks(state:GameState, report:DiagnosticsReport) -> dict:
    """ Pass/fail of every acceptance bound that applies to this run. """
    return {name: passed for name, (_, _, passed) in acceptance_metrics(state, report).items()}


def summary_table(state:GameState, report:DiagnosticsReport) -> list:
    """ Rows (metric, value, bound, reference, status), one per acceptance bound. """
    references = {name: reference for name, (_, reference) in report_summary(report).items()}
    return [
        (name, value, bound, references.get(name), 'ok' if passed else 'FAIL')
            for name, (value, bound, passed) in acceptance_metrics(state, report).items()
    ]


def print_table(rows:list):
    print(f"{'metric':<26}{'value':>14}{'bound':>14}{'reference':>14}  status")
    for name, value, bound, reference, status in rows:
        ref = '' if reference is None else f"{reference:.2e}"
        print(f"{name:<26}{value:>14.3e}{bound:>14.2e}{ref:>14}  {status}")


def run_reproduction_preset(overrides:dict=None, path:str=None) -> tuple:
    """
    Full pipeline on the reference parameter set. Prints every acceptance bound with its value and
    the reference value where one exists, and returns (exit status, summary rows); the status is 1 if any
    acceptance bound fails.
    """
    from storage.file import FileWriter

    config = load_config(path=path, overrides=overrides, preset='paper')
    state, report = run_game(config)
    FileWriter(config.out).emit_artifacts(state, report, config)
    checks = acceptance_checks(state, report)
    rows = summary_table(state, report)
    print_table(rows)
    failed = [name for name, passed in checks.items() if not passed]
    if failed:
        logging.error(f"Acceptance bounds failed: {failed}")
        return 1, rows
    return 0, rows
