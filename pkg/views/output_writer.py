# File: views/output_writer.py

"""
Run artifacts: per-replicate CSV, JSON summary and the run manifest.
"""

import json
import logging
import os
import platform
import sys
from dataclasses import asdict, is_dataclass
from enum import Enum

import numpy as np
import pandas as pd
import scipy
import yaml

import config

logger = logging.getLogger(__name__)

FLOAT_FORMAT = '%.17g'
RAW_CSV = 'raw.csv'
SUMMARY_JSON = 'summary.json'
MANIFEST_JSON = 'manifest.json'


def to_builtin(value):
    if is_dataclass(value) and not isinstance(value, type):
        return to_builtin(asdict(value))
    if isinstance(value, dict):
        return {str(k): to_builtin(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_builtin(v) for v in value]
    if isinstance(value, Enum):
        return value.value
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else str(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return to_builtin(value.tolist())
    return value


def software_versions() -> dict:
    return {
        'cbe_lab': config.APP_VERSION,
        'python': sys.version.split()[0],
        'platform': platform.platform(),
        'numpy': np.__version__,
        'scipy': scipy.__version__,
        'pandas': pd.__version__,
        'pyyaml': yaml.__version__,
    }


def write_csv(frame: pd.DataFrame, path: str) -> str:
    """Write a frame with every float at 17 significant digits."""
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
    logger.debug(f"Wrote {len(frame)} rows to {path}")
    return path


def write_json(payload, path: str) -> str:
    with open(path, 'w') as f:
        json.dump(to_builtin(payload), f, indent=2, sort_keys=True)
    return path


def format_number(value: float) -> str:
    return FLOAT_FORMAT % value


def sidecar_path(csv_path: str) -> str:
    return os.path.splitext(csv_path)[0] + '.json'


def write_dump(frame: pd.DataFrame, csv_path: str, metadata: dict) -> dict:
    """
    Write a CSV dump and its JSON sidecar (metadata plus software versions) next to it.

    Returns:
        dict: Paths of the written files.
    """
    try:
        folder = os.path.dirname(os.path.abspath(csv_path))
        os.makedirs(folder, exist_ok=True)
        paths = {'csv': write_csv(frame, csv_path)}
        sidecar = dict(metadata, versions=software_versions(), files=dict(paths))
        paths['sidecar'] = write_json(sidecar, sidecar_path(csv_path))
        logger.info(f"Wrote {len(frame)} rows to {csv_path} with sidecar {paths['sidecar']}")
        return paths
    except Exception as e:
        logger.error(f"Error writing dump {csv_path}: {str(e)}")
        raise


def write_run(out_dir: str, summary, raw: pd.DataFrame, manifest: dict, raw_csv: str = RAW_CSV,
              summary_json: str = SUMMARY_JSON) -> dict:
    """
    Write raw CSV, summary JSON and manifest into out_dir.

    Returns:
        dict: Paths of the written files.
    """
    try:
        os.makedirs(out_dir, exist_ok=True)
        paths = {
            'raw_csv': write_csv(raw, os.path.join(out_dir, raw_csv)),
            'summary_json': write_json(summary, os.path.join(out_dir, summary_json)),
        }
        manifest = dict(manifest, versions=software_versions(), files=paths)
        paths['manifest'] = write_json(manifest, os.path.join(out_dir, MANIFEST_JSON))
        logger.info(f"Run artifacts written to {out_dir}")
        return paths
    except Exception as e:
        logger.error(f"Error writing run artifacts to {out_dir}: {str(e)}")
        raise
