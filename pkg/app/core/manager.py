from dataclasses import dataclass, field
import logging

from core.auxiliary import frobenius
from core.config import RunConfig
from core.meanfield import InitialLaw, estimate_mean_field
from core.volterra import (BoundarySurface, MeanField, PicardSolution, isotonic_projection, solve_picard)


@dataclass
class GameState:
    """ The (b_n, m^[n]) sequence of the game iteration and its convergence history. """
    n: int
    b_current: BoundarySurface
    m_current: MeanField
    boundaries: list = field(default_factory=list)        # b_0, ..., b_n
    mean_fields: list = field(default_factory=list)       # m^[0], ..., m^[n]
    drivers: list = field(default_factory=list)           # mean field each b_n was solved with
    game_errors: list = field(default_factory=list)       # ||b_n - b_{n-1}||_2 for n >= 1
    picard_errors: list = field(default_factory=list)     # per n: ||b^(k) - b^(k-1)||_2
    picard_distances: list = field(default_factory=list)  # per n: ||b^(K) - b^(k)||_2, k = 0..K
    iterates: dict = field(default_factory=dict)          # per n: Picard iterates, if kept
    converged: bool = False

    @property
    def m_dagger(self) -> MeanField:
        """ Mean field that produced the current boundary. """
        return self.drivers[-1]


class GameManager(object):
    """
    Class to run the game iteration: solve the boundary against the current mean field,
    re-estimate the mean field by Monte Carlo, and stop once consecutive boundaries agree.

    Args:
        config: (RunConfig) resolved run configuration
    """
    def __init__(self, config:RunConfig):
        self.config = config
        self.params = config.params()
        self.grid = config.grid()
        self.payoff = config.model_payoff()
        self.law = InitialLaw.from_csv(config.initial_law_file) if config.initial_law_file else InitialLaw.uniform(self.grid)

    def begin_game(self) -> GameState:
        """ m^[-1] = 1 and the cold-start boundary x̄(y). """
        logging.info(f"Starting game on a {self.grid.shape} grid (n_max={self.config.n_max}, k_max={self.config.k_max})")
        self.state = GameState(
            n=-1,
            b_current=BoundarySurface.terminal(self.grid, self.params, self.payoff, n=0),
            m_current=MeanField.constant(self.grid, 1.0, n=-1)
        )
        return self.state

    def solve_boundary(self, n:int) -> PicardSolution:
        """ Picard solve of b_n, warm-started from the previous boundary. """
        b_init = self.state.b_current.retag(n=n, k=0)
        solution = solve_picard(
            b_init, self.state.m_current, self.params, self.payoff,
            eta=self.config.eta, k_max=self.config.k_max,
            quadrature=self.config.quadrature, horizon=self.config.horizon,
            workers=self.config.workers
        )
        if self.config.isotonic_projection:
            solution = solution._replace(surface=isotonic_projection(solution.surface))
        return solution

    def update_mean_field(self, b:BoundarySurface) -> MeanField:
        return estimate_mean_field(
            b, self.state.m_current, self.params,
            n_paths=self.config.mc_paths, seed=self.config.seed, stream=b.n, law=self.law,
            block_size=self.config.block_size, workers=self.config.workers
        )

    def step(self) -> GameState:
        """ One game iteration n -> n + 1. """
        state = self.state
        n = state.n + 1
        solution = self.solve_boundary(n)
        b_n = solution.surface
        m_n = self.update_mean_field(b_n)

        state.drivers.append(state.m_current)
        state.picard_errors.append(solution.errors)
        state.picard_distances.append([frobenius(b_n.values, b.values) for b in solution.iterates])
        if self.config.dump_iterations:
            state.iterates[n] = solution.iterates
        if state.boundaries:
            err = frobenius(b_n.values, state.boundaries[-1].values)
            state.game_errors.append(err)
            logging.info(f"Game n={n}: ||b_n - b_n-1|| = {err:.3e}")
        state.boundaries.append(b_n)
        state.mean_fields.append(m_n)
        state.n, state.b_current, state.m_current = n, b_n, m_n
        return state

    def is_converged(self) -> bool:
        errors = self.state.game_errors
        return bool(errors) and errors[-1] < self.config.eta

    def run(self) -> GameState:
        """ Iterate until ||b_n - b_{n-1}||_2 < eta or n = n_max. """
        self.begin_game()
        self.step()
        while not self.is_converged() and self.state.n < self.config.n_max:
            self.step()
        self.state.converged = self.is_converged()
        if self.config.n_max > 0 and not self.state.converged:
            last = self.state.game_errors[-1]
            logging.warning(f"Game iteration stopped at n_max={self.config.n_max} with ||b_n - b_n-1|| = {last:.3e} >= {self.config.eta}")
        return self.state
