import logging
import json
import os

import numpy as np

from core.auxiliary import fmt, sha256_file
from core.decorators import STAGE_TIMINGS, stage
from core.meanfield import invert_boundary
from parameters import DATA_DIR

FLOAT_FORMAT = '%.17g'


class FileWriter(object):
    """
    Writes the artifacts of a run (CSV tables, JSON report and manifest) under one directory.

    Args:
        out_dir: (str) output directory, created if missing (default: DATA_DIR)
    """
    def __init__(self, out_dir:str=DATA_DIR):
        self.out_dir = out_dir
        self.files = []
        try:
            os.makedirs(out_dir, exist_ok=True)
        except OSError as e:
            raise OSError(f"Cannot create output directory '{out_dir}': {e}") from e
        logging.info(f"Will write artifacts to '{out_dir}'.")

    def _path(self, name:str) -> str:
        path = os.path.join(self.out_dir, name)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        return path

    def write_table(self, name:str, header:list, rows:np.ndarray):
        """ CSV with a header line; floats in lossless 17-digit form. """
        path = self._path(name)
        try:
            np.savetxt(path, np.atleast_2d(rows).reshape(-1, len(header)), fmt=FLOAT_FORMAT,
                       delimiter=',', header=','.join(header), comments='')
        except OSError as e:
            raise OSError(f"Cannot write '{path}': {e}") from e
        self.files.append(name)
        logging.debug(f"Wrote {name}")

    def write_json(self, name:str, payload:dict, record:bool=True):
        path = self._path(name)
        try:
            with open(path, 'w') as f:
                json.dump(payload, f, indent=2, sort_keys=True, default=float)
        except OSError as e:
            raise OSError(f"Cannot write '{path}': {e}") from e
        if record:
            self.files.append(name)

    def write_surface(self, name:str, t:np.ndarray, s:np.ndarray, values:np.ndarray, header:list):
        """ Row-major (t, s, value) triples of a surface. """
        tt, ss = np.meshgrid(t, s, indexing='ij')
        self.write_table(name, header, np.column_stack([tt.ravel(), ss.ravel(), values.ravel()]))

    @stage('artifacts')
    def emit_artifacts(self, state, report, config) -> dict:
        """ Write every artifact of a run and return the manifest. """
        grid = state.b_current.grid

        for b in state.boundaries:
            self.write_surface(f"boundary_n{b.n}.csv", grid.t, grid.y, b.values, ['t', 'y', 'b'])
            self.write_surface(f"inverse_n{b.n}.csv", grid.t, grid.x, invert_boundary(b).values, ['t', 'x', 'c'])
        for n, iterates in state.iterates.items():
            for b in iterates:
                self.write_surface(f"iterations/boundary_n{n}_k{b.k}.csv", grid.t, grid.y, b.values, ['t', 'y', 'b'])

        self.write_table('meanfield.csv', ['n', 't', 'm'], np.vstack([
            np.column_stack([np.full(grid.t.size, m.n), grid.t, m.values]) for m in state.mean_fields
        ]))
        self.write_table('convergence.csv', ['n', 'k', 'err'], np.array([
            (n, k, err) for n, errors in enumerate(state.picard_errors) for k, err in enumerate(errors, start=1)
        ]))
        self.write_table('picard_distance.csv', ['n', 'k', 'dist'], np.array([
            (n, k, dist) for n, distances in enumerate(state.picard_distances) for k, dist in enumerate(distances)
        ]))
        self.write_table('game_error.csv', ['n', 'err'], np.array([
            (n, err) for n, err in enumerate(state.game_errors, start=1)
        ]).reshape(-1, 2))
        self.write_table('game_summary.csv', ['n', 'picard_iters_used', 'picard_final_err', 'game_err'], np.array([
            (n, len(errors), errors[-1], state.game_errors[n - 1] if n >= 1 else np.nan)
                for n, errors in enumerate(state.picard_errors)
        ]))
        self.write_surface('residual.csv', grid.t[:-1], grid.y, report.residual, ['t', 'y', 'R'])

        if report.representative is not None:
            p = report.representative
            self.write_table('paths/representative.csv', ['step', 't', 'X', 'Y', 'xi', 'c_along'], np.column_stack([
                np.arange(p.t.size), p.t, p.X[0], p.Y[0], p.xi[0], p.c_along[0]
            ]))
        if report.batch is not None:
            paths, steps = np.nonzero(report.batch.active)
            self.write_table('paths/active_set.csv', ['path', 'step', 't', 'G'], np.column_stack([
                paths, steps, report.batch.t[steps], report.batch.gap[paths, steps]
            ]).reshape(-1, 4))
        for s in report.oracle:
            self.write_table(f"oracle_y{s['y']:g}.csv", ['t', 'b_hat'], np.column_stack([s['t'], s['b_hat']]))

        self.write_json('report.json', {
            'diagnostics': report.to_dict(),
            'game': {
                'iterations': state.n + 1,
                'converged': state.converged,
                'game_errors': state.game_errors,
                'picard_errors': state.picard_errors,
            },
            # Worker count and output location do not change results, keep them out of hashed content
            'config': {k: v for k, v in config.to_dict().items() if k not in ('workers', 'out')},
        })
        return self.write_manifest(config)

    def write_manifest(self, config) -> dict:
        """ Every written file with its sha256, the config echo, the seed and the stage wall-clock. """
        manifest = {
            'files': [
                {'path': name, 'sha256': sha256_file(os.path.join(self.out_dir, name))}
                    for name in sorted(self.files)
            ],
            'config': config.to_dict(),
            'seed': config.seed,
            'stage_seconds': {name: float(fmt(seconds)) for name, seconds in STAGE_TIMINGS.items()},
        }
        self.write_json('manifest.json', manifest, record=False)
        logging.info(f"Wrote {len(self.files)} artifact(s) and manifest.json to '{self.out_dir}'")
        return manifest
