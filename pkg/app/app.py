"""Command-line entry point of the capacity-expansion solver. It resolves a run configuration, runs the game iteration and the diagnostic suite, and writes every artifact of the run to the output directory.

Example usage:
	```
	python app/app.py --preset paper --out ./app/data/paper
	python app/app.py --config run.json --seed 7 --mc-paths 2000 --oracle-check
	LOG_LEVEL=INFO python app/app.py --eta 1e-4 --workers 4
	```

Exit status: 0 on success, 1 if an acceptance bound of the reference preset fails, and the error's
exit code otherwise (2 configuration, 3 degenerate boundary, 4 oracle range).
"""

import argparse
import sys

from core import decorators, logic
from core.config import load_config
from storage.file import FileWriter


def build_parser() -> argparse.ArgumentParser:
	parser = argparse.ArgumentParser(description="Mean-field capacity-expansion solver.")
	parser.add_argument("--config", help="JSON file with config keys (see app/parameters.py).")
	parser.add_argument("--out", help="Output directory (default: DATA_DIR).")
	parser.add_argument("--seed", type=int, help="Master seed of the Monte Carlo streams.")
	parser.add_argument("--mc-paths", type=int, help="Paths per mean-field update.")
	parser.add_argument("--eta", type=float, help="Picard and game tolerance.")
	parser.add_argument("--preset", choices=["paper"], help="Run the reference experiment with its acceptance gate.")
	parser.add_argument("--oracle-check", action="store_true", default=None, help="Cross-check against backward dynamic programming.")
	parser.add_argument("--dump-iterations", action="store_true", default=None, help="Write every Picard iterate.")
	parser.add_argument("--isotonic-projection", action="store_true", default=None, help="Project boundaries onto monotone surfaces.")
	parser.add_argument("--diag-paths", type=int, help="Paths of the Skorokhod diagnostic batch.")
	parser.add_argument("--diag-steps", type=int, help="Time steps of the Skorokhod diagnostic batch.")
	parser.add_argument("--workers", type=int, help="Worker threads (results do not depend on it).")
	return parser


def overrides_from(args:argparse.Namespace) -> dict:
	""" Flags given on the command line, keyed like the config. """
	return {key: value for key, value in vars(args).items() if key not in ("config", "preset") and value is not None}


@decorators.handle_errors
def main(argv:list=None) -> int:
	args = build_parser().parse_args(argv)
	overrides = overrides_from(args)
	if args.preset == "paper":
		status, _ = logic.run_reproduction_preset(overrides=overrides, path=args.config)
		return status

	config = load_config(path=args.config, overrides=overrides)
	state, report = logic.run_game(config)
	FileWriter(config.out).emit_artifacts(state, report, config)
	logic.print_table(logic.summary_table(state, report))
	return 0


if __name__ == "__main__":
	sys.exit(main())
