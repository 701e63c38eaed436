# File: controllers/cli_controller.py

import argparse
import copy
import json
import logging
import os
import sys
import time
from datetime import datetime
from typing import List, Optional

import numpy as np
import pandas as pd
import yaml

import config
from controllers.experiment_controller import DEFAULT_TOLERANCES, ExperimentController
from controllers.replicate_runner import ReplicateRunner
from database.database_manager import DatabaseManager
from models.ensemble import EnsembleSpec, SpectrumSample
from models.field import FieldKind
from models.gmc_measure import NormalizerMode
from models.oracle import MomentKind, MomentQuery
from models.run import EXPERIMENT_SUBCOMMANDS, CliInvocation, ExperimentConfig
from utils import fields, gmc, oracles
from utils.errors import AcceptanceError, ConfigError, DomainError
from utils.sampler import EigenSolver, sample_batch
from views import output_writer

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_USAGE = 2
LOG_LEVELS = ('DEBUG', 'INFO', 'WARNING', 'ERROR')


def _float_list(text: str) -> List[float]:
    return [float(v) for v in text.split(',') if v.strip()]


def _int_list(text: str) -> List[int]:
    return [int(v) for v in text.split(',') if v.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog='cbe-lab', description="Circular beta-ensemble Monte Carlo lab.")
    parser.add_argument('--log-level', default='INFO', choices=LOG_LEVELS)
    sub = parser.add_subparsers(dest='subcommand', metavar='subcommand')
    sub.required = True

    sample = sub.add_parser('sample', help="draw sorted eigenangles")
    sample.add_argument('--beta', type=float, required=True)
    sample.add_argument('--n', type=int, required=True)
    sample.add_argument('--seed', type=int, default=0, help="master seed")
    sample.add_argument('--replicates', type=int, default=1)
    sample.add_argument('--solver', default='prufer', choices=[s.value for s in EigenSolver])
    sample.add_argument('--out', help="CSV path, written with a JSON sidecar (default: stdout)")

    field = sub.add_parser('fields', help="dump a field of one sample on a grid")
    field.add_argument('--beta', type=float, required=True)
    field.add_argument('--n', type=int, required=True)
    field.add_argument('--seed', type=int, default=0, help="master seed; replicate 0 is used")
    field.add_argument('--kind', default=FieldKind.LOG_ABS_P.value, choices=[k.value for k in FieldKind])
    field.add_argument('--r', type=float, default=1.0)
    field.add_argument('--M', type=int, default=None, help="grid size (default max(4096, 8n))")
    field.add_argument('--offset', type=float, default=0.5, help="grid offset in cells")
    field.add_argument('--gamma', type=float, default=None,
                       help="dump the chaos measure exp(gamma field) at radius --r as theta,weight")
    field.add_argument('--out', help="CSV path, written with a JSON sidecar (default: stdout)")

    oracle = sub.add_parser('oracle', help="exact finite-N log-moments")
    oracle.add_argument('--beta', type=float)
    oracle.add_argument('--n', type=int)
    oracle.add_argument('--gamma', type=float)
    oracle.add_argument('--kind', default=MomentKind.ABS_CHARPOLY.value, choices=[k.value for k in MomentKind])
    oracle.add_argument('--table', action='store_true', help="dump a regression table over lists")
    oracle.add_argument('--betas', type=_float_list, default=[0.5, 1.0, 2.0, 4.0])
    oracle.add_argument('--ns', type=_int_list, default=[1, 2, 8, 64])
    oracle.add_argument('--gammas', type=_float_list, default=[0.5, 1.0, 2.0])
    oracle.add_argument('--out', help="CSV path for --table, written with a JSON sidecar (default: stdout)")

    for name in EXPERIMENT_SUBCOMMANDS:
        experiment = sub.add_parser(name, help=f"run the {name} experiment")
        experiment.add_argument('--config', required=True, help="JSON or YAML experiment config")
        experiment.add_argument('--set', dest='overrides', action='append', default=[], metavar='KEY=VALUE',
                                help="dotted override, value parsed as JSON when possible")
        experiment.add_argument('--out-dir', help="output directory")
        experiment.add_argument('--workers', type=int, default=None, help="worker processes (default: cores)")
        experiment.add_argument('--registry', default=None, help="run registry sqlite file")
    return parser


def load_defaults(path: str = config.DEFAULTS_FILE) -> dict:
    """Load config.yaml defaults."""
    try:
        with open(path, 'r') as f:
            return yaml.safe_load(f) or {}
    except Exception as e:
        logger.error(f"Error loading defaults from {path}: {str(e)}")
        raise ConfigError(f"cannot read defaults file {path}: {str(e)}")


def read_config_file(path: str) -> dict:
    if not os.path.exists(path):
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, 'r') as f:
            if path.endswith(('.yaml', '.yml')):
                data = yaml.safe_load(f)
            else:
                data = json.load(f)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot parse {path}: {str(e)}")
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a mapping at top level")
    return data


def deep_merge(base: dict, update: dict) -> dict:
    merged = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = deep_merge(merged[key], value)
        else:
            merged[key] = copy.deepcopy(value)
    return merged


def apply_override(data: dict, dotted: str, value) -> None:
    keys = dotted.split('.')
    node = data
    for key in keys[:-1]:
        if not isinstance(node.setdefault(key, {}), dict):
            raise ConfigError(f"override '{dotted}' descends into non-mapping key '{key}'")
        node = node[key]
    node[keys[-1]] = value


def build_config(subcommand: str, file_data: dict, overrides: dict, defaults: dict = None) -> ExperimentConfig:
    """
    Merge config.yaml defaults, the config file and dotted overrides, in that order.

    Raises:
        ConfigError: On unknown keys or invalid values.
    """
    defaults = defaults if defaults is not None else load_defaults()
    merged = deep_merge(defaults.get('defaults', {}), defaults.get('experiments', {}).get(subcommand, {}))
    merged['tolerances'] = deep_merge(defaults.get('tolerances', DEFAULT_TOLERANCES), merged.get('tolerances', {}))
    known_tolerances = set(merged['tolerances'])
    merged = deep_merge(merged, file_data)
    if 'beta' in file_data and 'beta_list' not in file_data:
        merged.pop('beta_list', None)
    if 'beta' in overrides and 'beta_list' not in overrides:
        merged.pop('beta_list', None)
    for key, value in overrides.items():
        apply_override(merged, key, value)
    unknown = set(merged.get('tolerances', {})) - known_tolerances
    if unknown:
        raise ConfigError(f"unknown tolerance keys: {sorted(unknown)}")
    return ExperimentConfig.from_dict(merged)


class CliController:
    """Parses the command line and dispatches to the sampler, field, oracle and experiment drivers."""

    def __init__(self, db_manager: DatabaseManager = None, stdout=None):
        self.db_manager = db_manager
        self.stdout = stdout or sys.stdout

    def _emit(self, frame: pd.DataFrame, out: Optional[str], metadata: dict, started_at: datetime,
              started: float):
        """CSV to a file with its JSON sidecar, or to stdout with no side files."""
        if not out:
            frame.to_csv(self.stdout, index=False, float_format=output_writer.FLOAT_FORMAT)
            return
        metadata = dict(metadata, argv=sys.argv[1:], started_at=started_at.isoformat(),
                        duration_s=time.perf_counter() - started)
        output_writer.write_dump(frame, out, metadata)

    def run_sample(self, args) -> int:
        started_at, started = datetime.now(), time.perf_counter()
        spec = EnsembleSpec(beta=args.beta, n=args.n)
        angles, seeds = sample_batch(spec, args.replicates, args.seed, solver=EigenSolver(args.solver))
        frame = pd.DataFrame({
            'replicate': np.repeat(np.arange(args.replicates), args.n),
            'index': np.tile(np.arange(args.n), args.replicates),
            'angle': angles.ravel(),
        })
        metadata = {'subcommand': 'sample', 'spec': {'beta': spec.beta, 'n': spec.n}, 'master_seed': args.seed,
                    'replicates': args.replicates, 'solver': args.solver, 'replicate_seeds': [int(s) for s in seeds]}
        self._emit(frame, args.out, metadata, started_at, started)
        return EXIT_OK

    def run_fields(self, args) -> int:
        """Dump a field grid, or with --gamma the chaos measure exp(gamma field) / normalizer."""
        started_at, started = datetime.now(), time.perf_counter()
        spec = EnsembleSpec(beta=args.beta, n=args.n)
        angles, seeds = sample_batch(spec, 1, args.seed)
        sample = SpectrumSample(angles=angles[0].copy(), spec=spec.with_seed(seeds[0]))
        kind = FieldKind(args.kind)
        if args.gamma is None:
            grid = fields.field_grid(sample, kind, r=args.r, M=args.M, offset=args.offset)
            frame, metadata = grid.to_frame(), grid.metadata()
        else:
            if kind == FieldKind.COUNTING:
                raise ConfigError("a chaos measure needs --kind log_abs_P or Psi")
            measure = gmc.build_measure(sample, args.gamma, args.r, kind, NormalizerMode.ASYMPTOTIC, M=args.M)
            frame = measure.to_frame()
            metadata = dict(measure.metadata(), kind=kind.value, **sample.spec.to_dict())
        metadata.update(subcommand='fields', master_seed=args.seed)
        self._emit(frame, args.out, metadata, started_at, started)
        return EXIT_OK

    def run_oracle(self, args) -> int:
        started_at, started = datetime.now(), time.perf_counter()
        if args.table:
            table = oracles.oracle_table(args.betas, args.ns, args.gammas)
            metadata = {'subcommand': 'oracle', 'betas': args.betas, 'ns': args.ns, 'gammas': args.gammas}
            self._emit(table, args.out, metadata, started_at, started)
            return EXIT_OK
        if args.beta is None or args.n is None or args.gamma is None:
            raise ConfigError("oracle needs --beta, --n and --gamma (or --table)")
        value = oracles.log_moment(MomentQuery(beta=args.beta, n=args.n, gamma=args.gamma, kind=args.kind))
        print(output_writer.format_number(value), file=self.stdout)
        return EXIT_OK

    def run_experiment(self, invocation: CliInvocation, registry: Optional[str]) -> int:
        overrides = invocation.parsed_overrides()
        cfg = build_config(invocation.subcommand, read_config_file(invocation.config_path), overrides)
        config_hash = cfg.config_hash()
        out_dir = invocation.out_dir or cfg.outputs.get('out_dir') \
            or os.path.join(config.OUTPUT_DIR, f"{cfg.name}_{config_hash[:12]}")
        controller = ExperimentController(ReplicateRunner(workers=invocation.workers))
        started_at = datetime.now()
        started = time.perf_counter()
        summary = controller.run(invocation.subcommand, cfg)
        duration = time.perf_counter() - started
        manifest = {
            'subcommand': invocation.subcommand,
            'argv': sys.argv[1:],
            'config_path': invocation.config_path,
            'overrides': overrides,
            'config': cfg.to_dict(),
            'config_hash': config_hash,
            'master_seed': cfg.master_seed,
            'workers': controller.runner.workers,
            'started_at': started_at.isoformat(),
            'duration_s': duration,
        }
        output_writer.write_run(out_dir, summary, controller.raw, manifest,
                                raw_csv=cfg.outputs.get('raw_csv', output_writer.RAW_CSV),
                                summary_json=cfg.outputs.get('summary_json', output_writer.SUMMARY_JSON))
        self._register(registry, invocation.subcommand, cfg, config_hash, started_at, duration, summary, out_dir)
        failed = [c['name'] for c in summary.checks if not c['passed']]
        print(json.dumps({'name': cfg.name, 'estimate': summary.estimate, 'std_error': summary.std_error,
                          'passed': not failed, 'failed_checks': failed, 'out_dir': out_dir}),
              file=self.stdout)
        if failed and cfg.assertions:
            raise AcceptanceError(f"{len(failed)} acceptance checks failed: {', '.join(failed)}")
        return EXIT_OK

    def _register(self, registry, subcommand, cfg, config_hash, started_at, duration, summary, out_dir):
        db = self.db_manager
        owned = db is None
        if owned:
            db = DatabaseManager(registry or config.DB_FILE)
            db.connect()
            db.init_db()
        try:
            db.record_run(subcommand, cfg.name, config_hash, cfg.master_seed, started_at, duration,
                          summary.passed, out_dir, output_writer.to_builtin(summary))
        finally:
            if owned:
                db.disconnect()

    def parse_and_dispatch(self, argv: List[str]) -> int:
        """
        Run one command line.

        Returns:
            int: 0 on success, 1 on a failed acceptance assertion or run error, 2 on usage errors.
        """
        parser = build_parser()
        try:
            args = parser.parse_args(argv)
        except SystemExit as e:
            return EXIT_OK if e.code in (0, None) else EXIT_USAGE
        logging.getLogger().setLevel(getattr(logging, args.log_level))
        try:
            if args.subcommand == 'sample':
                return self.run_sample(args)
            if args.subcommand == 'fields':
                return self.run_fields(args)
            if args.subcommand == 'oracle':
                return self.run_oracle(args)
            invocation = CliInvocation(subcommand=args.subcommand, config_path=args.config,
                                       overrides=args.overrides, out_dir=args.out_dir, workers=args.workers)
            return self.run_experiment(invocation, args.registry)
        except (ConfigError, DomainError) as e:
            print(f"error: {str(e)}", file=sys.stderr)
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        except AcceptanceError as e:
            logger.error(str(e))
            return EXIT_FAILED
        except Exception:
            logger.exception("Run failed")
            return EXIT_FAILED


def parse_and_dispatch(argv: List[str] = None, db_manager: DatabaseManager = None) -> int:
    return CliController(db_manager).parse_and_dispatch(sys.argv[1:] if argv is None else argv)
