# File: models/run.py

import copy
import hashlib
import json
import logging
from dataclasses import asdict, dataclass, field, replace
from typing import Dict, List, Optional, Tuple

from utils.errors import ConfigError

logger = logging.getLogger(__name__)

SUBCOMMANDS = ('sample', 'fields', 'oracle', 'clt', 'meso', 'sine', 'gmc', 'rigidity', 'loopeq', 'errbudget')
EXPERIMENT_SUBCOMMANDS = ('clt', 'meso', 'sine', 'gmc', 'rigidity', 'loopeq', 'errbudget')

CONFIG_KEYS = {'name', 'beta', 'beta_list', 'n_list', 'replicates', 'master_seed', 'solver', 'statistic',
               'outputs', 'tolerances', 'assertions'}
STATISTIC_KEYS = {'kind', 'test_function', 'test_functions', 'params', 'scale_rule', 'scale_exponent',
                  'scales', 'gamma', 'gammas', 'r', 'r_presets', 'r_delta', 'nu', 't', 't_grid', 'delta',
                  'oversample', 'arcs', 'field_kind', 'normalizer_mode', 'thick_gamma', 'grid_size'}
OUTPUT_KEYS = {'out_dir', 'raw_csv', 'summary_json'}
MIN_CI_REPLICATES = 100


@dataclass
class ExperimentConfig:
    """
    One experiment: ensemble, replicate plan and statistic settings.

    A non-empty ``beta_list`` sweeps the whole experiment over several betas;
    ``beta`` is then its first entry.

    ``statistic`` carries the experiment-specific block (test function,
    scale rule, gamma, radius, t-grid, ...); ``tolerances`` overrides the
    defaults of config.yaml.
    """
    name: str
    beta: float
    n_list: List[int]
    replicates: int
    master_seed: int = 0
    solver: str = 'prufer'
    beta_list: List[float] = field(default_factory=list)
    statistic: Dict = field(default_factory=dict)
    outputs: Dict = field(default_factory=dict)
    tolerances: Dict = field(default_factory=dict)
    assertions: bool = True

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        """
        Build and validate a config from a merged dictionary.

        Raises:
            ConfigError: On unknown or invalid keys.
        """
        unknown = set(data) - CONFIG_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        unknown = set(data.get('statistic', {})) - STATISTIC_KEYS
        if unknown:
            raise ConfigError(f"unknown statistic keys: {sorted(unknown)}")
        unknown = set(data.get('outputs', {})) - OUTPUT_KEYS
        if unknown:
            raise ConfigError(f"unknown output keys: {sorted(unknown)}")
        for key in ('name', 'n_list', 'replicates'):
            if key not in data:
                raise ConfigError(f"missing required config key '{key}'")
        if 'beta' not in data and not data.get('beta_list'):
            raise ConfigError("missing required config key 'beta'")
        try:
            beta_list = [float(b) for b in (data.get('beta_list') or [])]
            cfg = cls(
                name=str(data['name']),
                beta=beta_list[0] if beta_list else float(data['beta']),
                beta_list=beta_list,
                n_list=[int(n) for n in (data['n_list'] if isinstance(data['n_list'], list) else [data['n_list']])],
                replicates=int(data['replicates']),
                master_seed=int(data.get('master_seed', 0)),
                solver=str(data.get('solver', 'prufer')),
                statistic=copy.deepcopy(data.get('statistic', {})),
                outputs=copy.deepcopy(data.get('outputs', {})),
                tolerances=copy.deepcopy(data.get('tolerances', {})),
                assertions=bool(data.get('assertions', True)),
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"invalid config value: {str(e)}")
        if min([cfg.beta] + cfg.beta_list) <= 0:
            raise ConfigError(f"beta must be positive, got {[cfg.beta] + cfg.beta_list}")
        if not cfg.n_list or min(cfg.n_list) < 1:
            raise ConfigError(f"n_list must hold positive integers, got {cfg.n_list}")
        if cfg.replicates < 2:
            raise ConfigError(f"replicates must be at least 2, got {cfg.replicates}")
        if cfg.replicates < MIN_CI_REPLICATES:
            logger.warning(f"{cfg.name}: {cfg.replicates} replicates is below {MIN_CI_REPLICATES}; "
                           f"confidence intervals are unreliable")
        return cfg

    def betas(self) -> List[float]:
        return list(self.beta_list) or [self.beta]

    def for_beta(self, beta: float) -> "ExperimentConfig":
        return replace(self, beta=float(beta), beta_list=[])

    def to_dict(self) -> dict:
        return asdict(self)

    def config_hash(self) -> str:
        canonical = json.dumps(self.to_dict(), sort_keys=True, separators=(',', ':'))
        return hashlib.sha256(canonical.encode('utf-8')).hexdigest()


@dataclass
class RunSummary:
    """Replicate-level statistics of one estimate plus its provenance and acceptance checks."""
    estimate: float
    std_error: float
    replicates: int
    n_eff: float
    ci95: Tuple[float, float] = (0.0, 0.0)
    ks_statistic: Optional[float] = None
    ks_pvalue: Optional[float] = None
    skewness: Optional[float] = None
    kurtosis: Optional[float] = None
    auxiliary: Dict = field(default_factory=dict)
    checks: List[Dict] = field(default_factory=list)
    provenance: Dict = field(default_factory=dict)

    def __post_init__(self):
        half = 1.96 * self.std_error
        self.ci95 = (self.estimate - half, self.estimate + half)

    def check(self, name: str, passed: bool, **detail) -> bool:
        """Record one acceptance assertion."""
        passed = bool(passed)
        self.checks.append({'name': name, 'passed': passed, **detail})
        if not passed:
            logger.warning(f"Acceptance check '{name}' failed: {detail}")
        return passed

    @property
    def passed(self) -> bool:
        return all(c['passed'] for c in self.checks)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class CliInvocation:
    """Parsed command line: subcommand, config file, dotted overrides and output directory."""
    subcommand: str
    config_path: Optional[str] = None
    overrides: List[str] = field(default_factory=list)
    out_dir: Optional[str] = None
    workers: Optional[int] = None

    def __post_init__(self):
        if self.subcommand not in SUBCOMMANDS:
            raise ConfigError(f"unknown subcommand '{self.subcommand}'")

    def parsed_overrides(self) -> Dict[str, object]:
        """key=value pairs, values decoded as JSON literals when possible."""
        parsed = {}
        for item in self.overrides:
            if '=' not in item:
                raise ConfigError(f"override '{item}' is not of the form key=value")
            key, raw = item.split('=', 1)
            try:
                parsed[key.strip()] = json.loads(raw)
            except json.JSONDecodeError:
                parsed[key.strip()] = raw
        return parsed
