"""
Run the same configuration with several worker counts and compare the content hashes of
every artifact. Exits non-zero if any file differs.

    python scripts/determinism_check.py --workers 1 4 --mc-paths 2000
"""

import argparse
import os
import sys
import tempfile

sys.path.insert(0, os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "app"))

from core import logic                      # noqa: E402
from core.config import load_config         # noqa: E402
from storage.file import FileWriter         # noqa: E402


def run_hashes(config_path:str, workers:int, overrides:dict, out_dir:str) -> dict:
    config = load_config(path=config_path, overrides={**overrides, "workers": workers, "out": out_dir})
    state, report = logic.run_game(config)
    manifest = FileWriter(config.out).emit_artifacts(state, report, config)
    return {entry["path"]: entry["sha256"] for entry in manifest["files"]}


def main():
    parser = argparse.ArgumentParser(description="Check that artifacts do not depend on the worker count.")
    parser.add_argument("--config", help="JSON config file (default: built-in defaults).")
    parser.add_argument("--workers", type=int, nargs="+", default=[1, 4], help="Worker counts to compare (default: 1 4).")
    parser.add_argument("--mc-paths", type=int, default=None, help="Override the path count for a quicker check.")
    parser.add_argument("--seed", type=int, default=None, help="Master seed.")
    args = parser.parse_args()

    overrides = {"mc_paths": args.mc_paths, "seed": args.seed}
    runs = {}
    with tempfile.TemporaryDirectory() as tmp:
        for workers in args.workers:
            runs[workers] = run_hashes(args.config, workers, overrides, os.path.join(tmp, f"workers_{workers}"))

    reference_workers, reference = next(iter(runs.items()))
    mismatches = []
    for workers, hashes in runs.items():
        for path in sorted(set(reference) | set(hashes)):
            if reference.get(path) != hashes.get(path):
                mismatches.append((workers, path))

    print("=== Determinism check ===")
    print(f"Worker counts:        {', '.join(str(w) for w in runs)}")
    print(f"Files compared:       {len(reference)}")
    print(f"Mismatches vs {reference_workers}:     {len(mismatches)}")
    for workers, path in mismatches:
        print(f"  workers={workers}: {path}")
    sys.exit(1 if mismatches else 0)


if __name__ == "__main__":
    main()
