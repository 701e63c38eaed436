# File: utils/function_library.py

"""
Named test functions and the CSV loader.

Line functions (bump3, triangle, cauchy, csv) are CompactFn objects; circle
functions (cos, constant, phi_r, psi_r) are PeriodicFn objects.
"""

import logging
import math
from typing import Union

import numpy as np
import pandas as pd
from scipy import interpolate

from models.test_function import CompactFn, MesoScaledFn, PeriodicFn
from utils import harmonic
from utils.errors import ConfigError, DomainError
from utils.kernels import KernelFamily

logger = logging.getLogger(__name__)

LINE_FUNCTIONS = ('bump3', 'triangle', 'cauchy', 'csv')
CIRCLE_FUNCTIONS = ('cos', 'constant', 'phi_r', 'psi_r')
CAUCHY_SUPPORT = 128.0


def bump3(support: float = 1.0) -> CompactFn:
    """(1 - (x/S)^2)^4 on [-S, S], a C^3 polynomial bump."""
    S = float(support)

    def w(x):
        u = x / S
        return (1.0 - u * u) ** 4

    def w1(x):
        u = x / S
        return -8.0 * u * (1.0 - u * u) ** 3 / S

    def w2(x):
        u = x / S
        return (-8.0 * (1.0 - u * u) ** 3 + 48.0 * u * u * (1.0 - u * u) ** 2) / S ** 2

    def w3(x):
        u = x / S
        return (144.0 * u * (1.0 - u * u) ** 2 - 192.0 * u ** 3 * (1.0 - u * u)) / S ** 3

    return CompactFn(support_half_width=S, func=w, smoothness_class=3, derivatives=(w1, w2, w3),
                     name=f"bump3(S={S:g})")


def triangle(support: float = 1.0) -> CompactFn:
    """(1 - |x|/S)_+."""
    S = float(support)
    return CompactFn(support_half_width=S, func=lambda x: 1.0 - np.abs(x) / S, smoothness_class=0,
                     derivatives=(lambda x: -np.sign(x) / S,), breakpoints=(-S, 0.0, S),
                     name=f"triangle(S={S:g})")


def _smooth_step_factor(u):
    with np.errstate(divide='ignore', over='ignore'):
        return np.where(u > 0.0, np.exp(-1.0 / np.where(u > 0.0, u, 1.0)), 0.0)


def taper(x, support: float):
    """C^infinity cutoff: 1 on [0, S/2], 0 beyond S."""
    half = support / 2.0
    u = np.clip((np.abs(x) - half) / half, 0.0, 1.0)
    left = _smooth_step_factor(1.0 - u)
    right = _smooth_step_factor(u)
    return left / (left + right)


def cauchy(support: float = CAUCHY_SUPPORT) -> CompactFn:
    """1/(1 + x^2), smoothly cut off on [S/2, S]."""
    S = float(support)
    return CompactFn(support_half_width=S, func=lambda x: taper(x, S) / (1.0 + x * x),
                     smoothness_class=3, name=f"cauchy(S={S:g})")


def load_csv(path: str, support: float = None, name: str = None) -> CompactFn:
    """
    Test function from an ``x,value`` CSV, interpolated by a cubic spline.

    Args:
        path: CSV file with columns x and value.
        support: Half-width S; defaults to max |x| of the table.
        name: Label, defaults to the path.

    Raises:
        ConfigError: If the file lacks the x/value columns or is too short.
    """
    try:
        frame = pd.read_csv(path)
    except Exception as e:
        logger.error(f"Error reading test function CSV {path}: {str(e)}")
        raise ConfigError(f"cannot read test function CSV {path}: {str(e)}")
    if not {'x', 'value'} <= set(frame.columns):
        raise ConfigError(f"{path} must have columns 'x' and 'value', found {list(frame.columns)}")
    frame = frame.sort_values('x').drop_duplicates('x')
    if len(frame) < 4:
        raise ConfigError(f"{path} needs at least 4 rows for spline interpolation")
    x = frame['x'].to_numpy(dtype=float)
    y = frame['value'].to_numpy(dtype=float)
    spline = interpolate.CubicSpline(x, y)
    S = float(support) if support is not None else float(np.max(np.abs(x)))
    derivatives = tuple(spline.derivative(k) for k in (1, 2, 3))
    logger.info(f"Loaded test function from {path}: {len(frame)} rows, support half-width {S:g}")
    return CompactFn(support_half_width=S, func=spline, smoothness_class=2, derivatives=derivatives,
                     name=name or str(path))


def cosine(k: int = 1, amplitude: float = 1.0, M: int = harmonic.DEFAULT_CIRCLE_GRID) -> PeriodicFn:
    return harmonic.periodic_from_callable(lambda t: amplitude * np.cos(k * t), M=M,
                                           name=f"cos({k}t)" if amplitude == 1.0 else f"{amplitude:g}cos({k}t)")


def constant(c: float = 1.0, M: int = harmonic.DEFAULT_CIRCLE_GRID) -> PeriodicFn:
    return harmonic.periodic_from_callable(lambda t: np.full(np.shape(t), float(c)), M=M, name=f"const({c:g})")


def kernel_function(which: str, r: float, M: int = None) -> PeriodicFn:
    """phi_r or psi_r on a grid that resolves r^k down to 1e-16."""
    family = KernelFamily(r)
    if M is None:
        M = max(harmonic.DEFAULT_CIRCLE_GRID, 2 * family.series_terms() + 2)
        M = 1 << int(math.ceil(math.log2(M)))
    return harmonic.periodic_from_callable(lambda t: family.kernel_eval(which, t), M=M, name=f"{which}_r(r={r:g})")


def compact_function(name: str, params: dict = None) -> CompactFn:
    """Library lookup for line functions; ``params`` carries support (and path for csv)."""
    params = dict(params or {})
    if name == 'bump3':
        return bump3(params.get('support', 1.0))
    if name == 'triangle':
        return triangle(params.get('support', 1.0))
    if name == 'cauchy':
        return cauchy(params.get('support', CAUCHY_SUPPORT))
    if name == 'csv':
        if 'path' not in params:
            raise ConfigError("csv test function needs params.path")
        return load_csv(params['path'], params.get('support'))
    raise ConfigError(f"unknown line test function '{name}'; choose from {LINE_FUNCTIONS}")


def periodic_function(name: str, params: dict = None) -> PeriodicFn:
    """Library lookup for circle functions, or a line function wrapped at params.scale (default 1)."""
    params = dict(params or {})
    M = params.get('M', harmonic.DEFAULT_CIRCLE_GRID)
    if name == 'cos':
        return cosine(int(params.get('k', 1)), float(params.get('amplitude', 1.0)), M=M)
    if name == 'constant':
        return constant(float(params.get('c', 1.0)), M=M)
    if name in ('phi_r', 'psi_r'):
        if 'r' not in params:
            raise ConfigError(f"{name} needs params.r")
        return kernel_function(name[:3], float(params['r']), params.get('M'))
    if name in LINE_FUNCTIONS:
        meso = MesoScaledFn(compact_function(name, params), float(params.get('scale', 1.0)))
        return harmonic.meso_wrap(meso, params.get('M'))
    raise ConfigError(f"unknown test function '{name}'; choose from {LINE_FUNCTIONS + CIRCLE_FUNCTIONS}")


def resolve(name: str, params: dict = None) -> Union[CompactFn, PeriodicFn]:
    if name in LINE_FUNCTIONS:
        return compact_function(name, params)
    if name in CIRCLE_FUNCTIONS:
        return periodic_function(name, params)
    raise ConfigError(f"unknown test function '{name}'")


def meso_scale(rule: str, n: int, exponent: float = 0.5, scale: float = None) -> float:
    """
    Mesoscopic scale L for size N.

    Rules: 'power' gives N^exponent, 'fixed' gives ``scale``.
    """
    if rule == 'power':
        if not 0.0 <= exponent < 1.0:
            raise DomainError(f"scale exponent must lie in [0, 1), got {exponent}")
        return float(n) ** exponent
    if rule == 'fixed':
        if scale is None:
            raise ConfigError("fixed scale rule needs statistic.scales or a scale value")
        return float(scale)
    raise ConfigError(f"unknown scale rule '{rule}'; use 'power' or 'fixed'")
