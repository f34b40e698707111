import json

import pytest

from app import build_parser, main, overrides_from
from core.logic import run_reproduction_preset
from parameters import SEED_ENV

from conftest import small_overrides


@pytest.fixture(autouse=True)
def no_seed_env(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)


def config_file(tmp_path, **extra) -> str:
    values = small_overrides(n_max=1, **extra)
    path = tmp_path / "run.json"
    path.write_text(json.dumps(values))
    return str(path)


def test_overrides_from_flags():
    args = build_parser().parse_args(["--seed", "3", "--mc-paths", "50", "--oracle-check", "--config", "x.json"])
    assert overrides_from(args) == {'seed': 3, 'mc_paths': 50, 'oracle_check': True}
    assert overrides_from(build_parser().parse_args([])) == {}


def test_main_writes_artifacts(tmp_path, capsys):
    out_dir = tmp_path / "out"
    assert main(["--config", config_file(tmp_path), "--out", str(out_dir), "--seed", "11"]) == 0
    assert (out_dir / "manifest.json").exists()
    with open(out_dir / "manifest.json") as f:
        assert json.load(f)['seed'] == 11
    assert 'norm_inf' in capsys.readouterr().out


def test_main_rejects_unknown_key(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({'mc_path': 10}))
    assert main(["--config", str(path), "--out", str(tmp_path)]) == 2


def test_main_rejects_zero_tolerance(tmp_path):
    assert main(["--config", config_file(tmp_path), "--eta", "0", "--out", str(tmp_path)]) == 2


def test_reproduction_preset_on_small_grid(tmp_path, capsys):
    status, rows = run_reproduction_preset(overrides=small_overrides(tmp_path, n_max=1))
    assert status in (0, 1)
    assert [row[0] for row in rows[:4]] == ['norm_inf', 'norm_2', 'max_abs_G_on_active_set', 'min_G']
    assert all(row[4] in ('ok', 'FAIL') for row in rows)
    assert (tmp_path / "report.json").exists()
    with open(tmp_path / "report.json") as f:
        assert json.load(f)['config']['preset'] == 'paper'
    assert 'metric' in capsys.readouterr().out
