from dataclasses import dataclass, asdict, fields
import logging
import json
import math
import os

from core.decorators import ConfigurationError
from core.model import Grid, ModelParams, Payoff, make_payoff
from core.volterra import HORIZONS, QUADRATURES
from parameters import DATA_DIR, DEFAULT_WORKERS, RUN_PARAMETERS, SEED_ENV


@dataclass(frozen=True)
class RunConfig:
    """ Every setting of a run; defaults are the reference experiment. """
    r: float = 0.01
    c0: float = 0.5
    sigma: float = 1.0
    T: float = 1.0
    l1: int = 75
    l2: int = 50
    l3: int = 25
    y0: float = 1e-3
    x_min: float = -5.0
    x_max: float = 0.5
    payoff: str = 'sqrt'
    payoff_alpha: float = 0.5
    eta: float = 1e-3
    k_max: int = 5
    n_max: int = 5
    quadrature: str = 'rectangle'
    horizon: str = 'quadrature'
    mc_paths: int = 10000
    seed: int = 20240501
    block_size: int = 1000
    workers: int = DEFAULT_WORKERS
    initial_law_file: str = None
    diag_paths: int = 96
    diag_steps: int = 700
    path_steps: int = 500
    path_x0: float = -5.0
    path_y0: float = 0.2
    oracle_check: bool = False
    oracle_slices: tuple = (0.25, 0.5, 1.0)
    oracle_nt: int = 300
    oracle_nx: int = 600
    oracle_order: int = 7
    oracle_tol_steps: float = 2.0
    dump_iterations: bool = False
    isotonic_projection: bool = False
    preset: str = None
    out: str = DATA_DIR

    def __post_init__(self):
        object.__setattr__(self, 'oracle_slices', tuple(float(y) for y in self.oracle_slices))
        if not (self.eta > 0 or math.isinf(self.eta)):
            raise ConfigurationError(f"'eta' must be > 0, got {self.eta}")
        for name, lowest in (('k_max', 1), ('n_max', 0), ('mc_paths', 1), ('block_size', 1), ('workers', 1),
                             ('diag_paths', 1), ('diag_steps', 1), ('path_steps', 1), ('oracle_nt', 1),
                             ('oracle_nx', 3), ('oracle_order', 1)):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < lowest:
                raise ConfigurationError(f"'{name}' must be an integer >= {lowest}, got {value}")
        if isinstance(self.seed, bool) or int(self.seed) != self.seed or not 0 <= self.seed < 2 ** 64:
            raise ConfigurationError(f"'seed' must be an integer in [0, 2**64), got {self.seed}")
        if self.quadrature not in QUADRATURES:
            raise ConfigurationError(f"'quadrature' must be one of {QUADRATURES}, got '{self.quadrature}'")
        if self.horizon not in HORIZONS:
            raise ConfigurationError(f"'horizon' must be one of {HORIZONS}, got '{self.horizon}'")
        if not 0 <= self.path_y0 <= 1:
            raise ConfigurationError(f"'path_y0' must lie in [0, 1], got {self.path_y0}")
        if any(not 0 < y <= 1 for y in self.oracle_slices):
            raise ConfigurationError(f"'oracle_slices' must lie in (0, 1], got {list(self.oracle_slices)}")
        if not self.oracle_tol_steps > 0:
            raise ConfigurationError(f"'oracle_tol_steps' must be > 0, got {self.oracle_tol_steps}")
        # Builds and validates the model objects
        self.params()
        self.model_payoff().validate(self.grid().y)

    def params(self) -> ModelParams:
        return ModelParams(r=self.r, c0=self.c0, sigma=self.sigma, T=self.T)

    def grid(self) -> Grid:
        return Grid(T=self.T, l1=self.l1, l2=self.l2, l3=self.l3, y0=self.y0, x_min=self.x_min, x_max=self.x_max)

    def model_payoff(self) -> Payoff:
        return make_payoff(self.payoff, self.payoff_alpha)

    def to_dict(self) -> dict:
        """ JSON-serializable echo of the config. """
        out = asdict(self)
        out['oracle_slices'] = list(self.oracle_slices)
        if math.isinf(self.eta):
            out['eta'] = 'inf'
        return out

    @classmethod
    def keys(cls) -> list:
        return [f.name for f in fields(cls)]


def _check_keys(values:dict, source:str):
    unknown = sorted(k for k in values if k not in RunConfig.keys() and not k.startswith('_'))
    if unknown:
        raise ConfigurationError(
            f"Unknown config key(s) {unknown} in {source}; valid keys: {', '.join(RunConfig.keys())}"
        )


def _read_file(path:str) -> dict:
    try:
        with open(path, 'r') as f:
            values = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"Cannot read config file '{path}': {e}") from e
    if not isinstance(values, dict):
        raise ConfigurationError(f"Config file '{path}' must hold a JSON object")
    return values


def load_config(path:str=None, overrides:dict=None, preset:str=None) -> RunConfig:
    """
    Resolve a RunConfig. Precedence (lowest first): defaults, preset, JSON file,
    MFG_SEED environment variable (seed only), explicit overrides (command-line flags).
    Overrides set to None are ignored.
    """
    file_values = _read_file(path) if path else {}
    overrides = {k: v for k, v in (overrides or {}).items() if v is not None}
    _check_keys(file_values, f"'{path}'")
    _check_keys(overrides, "overrides")

    name = overrides.get('preset') or file_values.get('preset') or preset
    values = {}
    if name:
        if name.upper() not in RUN_PARAMETERS:
            raise ConfigurationError(f"Unknown preset '{name}', valid: {', '.join(RUN_PARAMETERS)}")
        values.update(RUN_PARAMETERS[name.upper()])
        values['preset'] = name.lower()
    values.update(file_values)
    if os.getenv(SEED_ENV):
        try:
            values['seed'] = int(os.environ[SEED_ENV])
        except ValueError as e:
            raise ConfigurationError(f"{SEED_ENV} must be an integer, got '{os.environ[SEED_ENV]}'") from e
    values.update(overrides)

    values = {k: v for k, v in values.items() if not k.startswith('_')}
    if values.get('eta') == 'inf':
        values['eta'] = math.inf
    try:
        config = RunConfig(**values)
    except TypeError as e:
        raise ConfigurationError(str(e)) from e
    logging.info(f"Loaded config (preset={config.preset}, file={path}, seed={config.seed})")
    return config
