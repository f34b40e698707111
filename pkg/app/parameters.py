"""
################################################
###           DOCUMENTATION                  ###
################################################

This file holds the parameter sets of the capacity-expansion solver. The sets are stored in a dictionary called
RUN_PARAMETERS and identified by a custom key (e.g. "PAPER"). Pass the key with `--preset` on the command line
(or as "preset" in a JSON config file) to start from that set; any key can still be overridden by the config file
and by command-line flags. Keys missing from a set fall back to the defaults of core.config.RunConfig.

We provide the set of the reference experiment (a 75 x 50 x 25 grid, five Picard and five game iterations) from
which to build your own. You can add as many parameter sets as you like.

We describe all parameters below:


################################################
###           MODEL PARAMETERS               ###
################################################

- r (float):				discount rate (>= 0; the terminal boundary needs r > 0)
- c0 (float):				unit cost of capacity (> 0)
- sigma (float):			volatility of the log-price (> 0)
- T (float):				horizon (> 0)
- payoff (str):				"sqrt" for g(y) = sqrt(y), "power" for g(y) = y**payoff_alpha
- payoff_alpha (float):		exponent of the "power" payoff, in (0, 1)


################################################
###           GRID PARAMETERS                ###
################################################

- l1, l2, l3 (int):			number of steps of the time, capacity and log-price partitions
- y0 (float):				lowest capacity level of the y-grid, in (0, 1)
- x_min, x_max (float):		log-price range of the initial law and of the inverse surface


################################################
###           SOLVER PARAMETERS              ###
################################################

- eta (float):				tolerance of both the Picard and the game stopping rule (> 0)
- k_max (int):				Picard iteration cap per game iteration (>= 1)
- n_max (int):				game iteration cap (>= 0)
- quadrature (str):			"rectangle" (full weight on every lag) or "trapezoid" (half weight at both ends)
- horizon (str):			"quadrature" evaluates the horizon term with the kernel quadrature, "exact" uses 1 - exp(-r (T - t))
- isotonic_projection (bool): project every converged boundary onto monotone surfaces before the mean-field update
- dump_iterations (bool):	write every Picard iterate to iterations/boundary_n{n}_k{k}.csv


################################################
###           MONTE CARLO PARAMETERS         ###
################################################

- mc_paths (int):			paths per mean-field update (>= 1)
- seed (int):				master seed; every path draws from its own stream derived from (seed, stream, path)
- block_size (int):			paths simulated and summed together; results do not depend on it
- workers (int):			threads for Picard rows, path blocks and oracle slices; results do not depend on it
- initial_law_file (str):	optional CSV with header x,y,weight replacing the uniform law on the grid
- diag_paths, diag_steps (int): size of the Skorokhod diagnostic batch
- path_steps (int):			time steps of the representative path
- path_x0, path_y0 (float):	starting point (X_0, Y_{0-}) of the representative path


################################################
###           ORACLE PARAMETERS              ###
################################################

- oracle_check (bool):		cross-check the first boundary against backward dynamic programming
- oracle_slices (list):		capacity levels to check
- oracle_nt, oracle_nx (int): fine time steps and x-nodes of the oracle
- oracle_order (int):		Gauss-Hermite order of the oracle expectation
- oracle_tol_steps (float):	allowed deviation, in fine x-steps


################################################
###           ENVIRONMENT                    ###
################################################

- MFG_SEED:					overrides the seed of any preset or config file (a command-line --seed still wins)
- DATA_DIR:					default output directory (default: ./app/data)
- MFG_WORKERS:				default number of worker threads (default: 1)
- LOG_LEVEL:				logging level (default: ERROR)
"""

import os

SEED_ENV = "MFG_SEED"
DATA_DIR = os.getenv("DATA_DIR", "./app/data")
DEFAULT_WORKERS = int(os.getenv("MFG_WORKERS", 1))

RUN_PARAMETERS = {
	"PAPER": {
		"_name": "PAPER",
		"_description": "Square-root payoff on the reference 75 x 50 x 25 grid with five Picard and five game iterations.",
		"r": 0.01,
		"c0": 0.5,
		"sigma": 1.0,
		"T": 1.0,
		"payoff": "sqrt",
		"l1": 75,
		"l2": 50,
		"l3": 25,
		"y0": 1e-3,
		"x_min": -5.0,
		"x_max": 0.5,
		"eta": 1e-3,
		"k_max": 5,
		"n_max": 5,
		"mc_paths": 10000,
		"diag_paths": 96,
		"diag_steps": 700,
		"path_steps": 500,
		"path_x0": -5.0,
		"path_y0": 0.2,
		"oracle_slices": [0.25, 0.5, 1.0],
	},
}
