import json
import math

import pytest

from core.config import RunConfig, load_config
from core.decorators import ConfigurationError
from parameters import RUN_PARAMETERS, SEED_ENV


@pytest.fixture(autouse=True)
def no_seed_env(monkeypatch):
    monkeypatch.delenv(SEED_ENV, raising=False)


def write_config(tmp_path, values) -> str:
    path = tmp_path / "run.json"
    path.write_text(json.dumps(values))
    return str(path)


def test_defaults_are_reference_experiment():
    config = load_config()
    assert (config.l1, config.l2, config.l3) == (75, 50, 25)
    assert (config.r, config.c0, config.sigma, config.T) == (0.01, 0.5, 1.0, 1.0)
    assert (config.eta, config.k_max, config.n_max) == (1e-3, 5, 5)
    assert config.mc_paths == 10000
    assert config.quadrature == 'rectangle' and config.horizon == 'quadrature'
    assert config.grid().shape == (76, 51)
    assert config.preset is None


@pytest.mark.parametrize("overrides", [
    {'eta': 0.0}, {'k_max': 0}, {'n_max': -1}, {'mc_paths': 0}, {'quadrature': 'simpson'},
    {'horizon': 'open'}, {'payoff': 'log'}, {'seed': -1}, {'l1': 0}, {'c0': 0.0}, {'oracle_slices': [0.0]},
])
def test_invalid_values_rejected(overrides):
    with pytest.raises(ConfigurationError):
        load_config(overrides=overrides)


def test_unknown_key_lists_valid_keys(tmp_path):
    path = write_config(tmp_path, {'mc_path': 10})
    with pytest.raises(ConfigurationError) as e:
        load_config(path=path)
    assert 'mc_path' in str(e.value)
    assert 'mc_paths' in str(e.value)


def test_unreadable_file(tmp_path):
    with pytest.raises(ConfigurationError):
        load_config(path=str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    with pytest.raises(ConfigurationError):
        load_config(path=str(bad))


def test_flag_beats_file(tmp_path):
    path = write_config(tmp_path, {'mc_paths': 500, 'seed': 3, 'k_max': 7})
    config = load_config(path=path, overrides={'mc_paths': 900, 'seed': None})
    assert config.mc_paths == 900
    assert config.seed == 3
    assert config.k_max == 7


def test_reference_preset():
    config = load_config(preset='paper')
    assert config.preset == 'paper'
    assert config.oracle_slices == (0.25, 0.5, 1.0)
    assert all(getattr(config, k) == v for k, v in RUN_PARAMETERS['PAPER'].items()
               if not k.startswith('_') and k != 'oracle_slices')
    with pytest.raises(ConfigurationError):
        load_config(preset='unknown')


def test_file_overrides_preset(tmp_path):
    path = write_config(tmp_path, {'preset': 'paper', 'n_max': 1})
    config = load_config(path=path)
    assert config.preset == 'paper'
    assert config.n_max == 1


def test_seed_environment(monkeypatch, tmp_path):
    monkeypatch.setenv(SEED_ENV, "99")
    path = write_config(tmp_path, {'seed': 3})
    assert load_config(path=path).seed == 99
    assert load_config(path=path, overrides={'seed': 5}).seed == 5
    monkeypatch.setenv(SEED_ENV, "abc")
    with pytest.raises(ConfigurationError):
        load_config()


def test_to_dict_round_trip():
    config = load_config(overrides={'eta': 1e-4, 'oracle_slices': [0.5], 'seed': 11})
    echoed = json.loads(json.dumps(config.to_dict()))
    assert RunConfig(**echoed) == config


def test_infinite_eta_round_trip(tmp_path):
    config = load_config(overrides={'eta': math.inf})
    assert config.to_dict()['eta'] == 'inf'
    path = write_config(tmp_path, {'eta': 'inf'})
    assert math.isinf(load_config(path=path).eta)
