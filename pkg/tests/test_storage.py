import json
import os

import numpy as np
import pytest

from core.auxiliary import sha256_file
from core.config import load_config
from core.logic import run_game
from storage.file import FileWriter

from conftest import small_overrides


def run_and_write(out_dir, **extra):
    config = load_config(overrides=small_overrides(out=str(out_dir), **extra))
    state, report = run_game(config)
    manifest = FileWriter(config.out).emit_artifacts(state, report, config)
    return config, state, manifest


def header(path) -> str:
    with open(path) as f:
        return f.readline().strip()


@pytest.fixture(scope="module")
def written(tmp_path_factory):
    out_dir = tmp_path_factory.mktemp("run")
    config, state, manifest = run_and_write(out_dir, n_max=1)
    return out_dir, config, state, manifest


def test_artifacts_and_headers(written):
    out_dir, config, state, _ = written
    expected = {
        'boundary_n0.csv': 't,y,b',
        'boundary_n1.csv': 't,y,b',
        'inverse_n0.csv': 't,x,c',
        'meanfield.csv': 'n,t,m',
        'convergence.csv': 'n,k,err',
        'picard_distance.csv': 'n,k,dist',
        'game_error.csv': 'n,err',
        'game_summary.csv': 'n,picard_iters_used,picard_final_err,game_err',
        'residual.csv': 't,y,R',
        'paths/representative.csv': 'step,t,X,Y,xi,c_along',
        'paths/active_set.csv': 'path,step,t,G',
    }
    for name, line in expected.items():
        assert header(out_dir / name) == line, name
    assert (out_dir / 'report.json').exists()
    assert (out_dir / 'manifest.json').exists()


def test_table_sizes(written):
    out_dir, config, state, _ = written
    grid = config.grid()
    boundary = np.genfromtxt(out_dir / 'boundary_n1.csv', delimiter=',', names=True)
    assert boundary.size == (grid.l1 + 1) * (grid.l2 + 1)
    np.testing.assert_array_equal(boundary['b'].reshape(grid.shape), state.boundaries[1].values)
    inverse = np.genfromtxt(out_dir / 'inverse_n0.csv', delimiter=',', names=True)
    assert inverse.size == (grid.l1 + 1) * (grid.l3 + 1)
    residual = np.genfromtxt(out_dir / 'residual.csv', delimiter=',', names=True)
    assert residual.size == grid.l1 * (grid.l2 + 1)
    meanfield = np.genfromtxt(out_dir / 'meanfield.csv', delimiter=',', names=True)
    assert meanfield.size == 2 * (grid.l1 + 1)
    path = np.genfromtxt(out_dir / 'paths/representative.csv', delimiter=',', names=True)
    assert path.size == config.path_steps + 1
    assert path['X'][0] == config.path_x0


def test_manifest_hashes(written):
    out_dir, config, _, manifest = written
    with open(out_dir / 'manifest.json') as f:
        on_disk = json.load(f)
    assert on_disk['seed'] == config.seed
    assert set(on_disk['stage_seconds']) >= {'game', 'diagnostics'}
    names = [entry['path'] for entry in on_disk['files']]
    assert 'manifest.json' not in names
    assert 'report.json' in names
    for entry in on_disk['files']:
        assert entry['sha256'] == sha256_file(os.path.join(out_dir, entry['path']))
    assert on_disk['files'] == manifest['files']


def test_report_contents(written):
    out_dir, config, state, _ = written
    with open(out_dir / 'report.json') as f:
        report = json.load(f)
    assert 'norm_inf' in report['diagnostics']
    assert report['game']['iterations'] == state.n + 1
    assert 'workers' not in report['config']
    assert report['config']['seed'] == config.seed


def test_single_boundary_file(tmp_path):
    run_and_write(tmp_path, n_max=0)
    assert sorted(p.name for p in tmp_path.glob('boundary_n*.csv')) == ['boundary_n0.csv']
    assert np.genfromtxt(tmp_path / 'game_error.csv', delimiter=',', skip_header=1).size == 0


def test_rerun_reproduces_hashes(tmp_path):
    _, _, first = run_and_write(tmp_path / 'a', n_max=1)
    _, _, second = run_and_write(tmp_path / 'b', n_max=1, workers=2)
    assert first['files'] == second['files']


def test_dump_iterations_files(tmp_path):
    _, state, _ = run_and_write(tmp_path, n_max=0, dump_iterations=True)
    written = sorted(p.name for p in (tmp_path / 'iterations').glob('*.csv'))
    assert written == sorted(f"boundary_n0_k{k}.csv" for k in range(len(state.picard_errors[0]) + 1))
