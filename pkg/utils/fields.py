# File: utils/fields.py

"""
Characteristic-polynomial fields of one eigenangle sample.

Sign convention: Psi_{N,r}(theta) = sum_j Im log(1 - r e^{i(theta - theta_j)}),
so at r = 1 each summand is the sawtooth (x - pi)/2 on (0, 2 pi) with slope
+1/2 and a jump of -pi at its eigenangle. With the kernel psi_r of
utils.kernels this reads Psi_{N,r}(theta) = -sum_j psi_r(theta - theta_j).
"""

import logging
import math
from typing import NamedTuple

import numpy as np

from models.ensemble import TWO_PI, SpectrumSample
from models.field import FieldGrid, FieldKind
from utils.errors import DomainError, SingularEvaluationError

logger = logging.getLogger(__name__)

CHUNK_ENTRIES = 1 << 22
POISSON_RESOLUTION = 16.0
SMOOTHING_TAIL = 1e-12


class FieldExtrema(NamedTuple):
    max: float
    argmax: float
    min: float
    argmin: float


def default_grid_size(n: int) -> int:
    return max(4096, 8 * n)


def _check_radius(r: float):
    if not 0.0 <= r <= 1.0:
        raise DomainError(f"radius must lie in [0, 1], got {r}")


def _chunked_sum(angles: np.ndarray, theta: np.ndarray, summand) -> np.ndarray:
    flat = theta.ravel()
    out = np.empty(flat.size)
    chunk = max(1, CHUNK_ENTRIES // max(1, angles.size))
    for start in range(0, flat.size, chunk):
        diff = flat[start:start + chunk, None] - angles[None, :]
        out[start:start + chunk] = summand(diff).sum(axis=1)
    return out.reshape(theta.shape)


def log_abs_p(sample: SpectrumSample, r: float, theta):
    """
    log|P_N(r e^{i theta})| = sum_j log|1 - r e^{i(theta - theta_j)}|.

    Raises:
        SingularEvaluationError: At r = 1 exactly on an eigenangle.
    """
    _check_radius(r)
    theta = np.asarray(theta, dtype=float)
    if r == 0.0:
        return np.zeros(theta.shape) if theta.ndim else 0.0

    def summand(diff):
        modulus = np.abs(1.0 - r * np.exp(1j * diff))
        if np.any(modulus == 0.0):
            raise SingularEvaluationError("log|P_N| evaluated on an eigenangle at r=1")
        return np.log(modulus)

    values = _chunked_sum(sample.angles, theta, summand)
    return values if theta.ndim else float(values)


def psi_field(sample: SpectrumSample, r: float, theta):
    """
    Psi_{N,r}(theta) = sum_j Im log(1 - r e^{i(theta - theta_j)}); at r = 1 the sawtooth form.

    Raises:
        SingularEvaluationError: At r = 1 exactly on an eigenangle.
    """
    _check_radius(r)
    theta = np.asarray(theta, dtype=float)
    if r == 0.0:
        return np.zeros(theta.shape) if theta.ndim else 0.0

    if r < 1.0:
        def summand(diff):
            return np.angle(1.0 - r * np.exp(1j * diff))
    else:
        def summand(diff):
            x = np.mod(diff, TWO_PI)
            if np.any(x == 0.0):
                raise SingularEvaluationError("Psi_N evaluated on an eigenangle")
            return 0.5 * (x - np.pi)

    values = _chunked_sum(sample.angles, theta, summand)
    return values if theta.ndim else float(values)


def counting_function(sample: SpectrumSample, theta):
    """h_N(theta) = #{j: theta_j in [0, theta]} - N theta / 2 pi, by binary search."""
    theta = np.asarray(theta, dtype=float)
    count = np.searchsorted(sample.angles, theta, side='right')
    values = count - sample.n * theta / TWO_PI
    return values if theta.ndim else float(values)


def psi_at_zero(sample: SpectrumSample) -> float:
    """Psi_N(0) = N pi / 2 - sum_j theta_j / 2."""
    return 0.5 * (sample.n * np.pi - float(np.sum(sample.angles)))


def max_psi_exact(sample: SpectrumSample) -> FieldExtrema:
    """
    Exact extrema of the boundary field Psi_N over the circle.

    Psi_N increases with slope N/2 between eigenangles and drops by pi at
    each of them, so the supremum is a left limit and the infimum a right
    limit at some eigenangle.
    """
    psi0 = psi_at_zero(sample)
    j = np.arange(1, sample.n + 1)
    scaled = sample.n * sample.angles / TWO_PI
    left = psi0 - np.pi * ((j - 1) - scaled)
    right = psi0 - np.pi * (j - scaled)
    i_max = int(np.argmax(left))
    i_min = int(np.argmin(right))
    best_max, arg_max = float(left[i_max]), float(sample.angles[i_max])
    best_min, arg_min = float(right[i_min]), float(sample.angles[i_min])
    if psi0 > best_max:
        best_max, arg_max = psi0, 0.0
    if psi0 < best_min:
        best_min, arg_min = psi0, 0.0
    return FieldExtrema(max=best_max, argmax=arg_max, min=best_min, argmin=arg_min)


def max_abs_counting(sample: SpectrumSample) -> float:
    """sup over the circle of |h_N|, from one-sided limits at the eigenangles."""
    j = np.arange(1, sample.n + 1)
    scaled = sample.n * sample.angles / TWO_PI
    return float(max(np.max(np.abs(j - scaled)), np.max(np.abs(j - 1 - scaled))))


def max_logp_grid(sample: SpectrumSample, oversample: int = 2) -> float:
    """
    Maximum of log|P_N(e^{i theta})| over theta_m = 2 pi m / (oversample N).

    At oversample 2 the result is within log 14 of the true maximum.
    """
    if oversample < 2:
        raise DomainError(f"oversample must be >= 2, got {oversample}")
    size = oversample * sample.n
    theta = TWO_PI * np.arange(size) / size

    def summand(diff):
        with np.errstate(divide='ignore'):
            return np.log(np.abs(1.0 - np.exp(1j * diff)))

    return float(np.max(_chunked_sum(sample.angles, theta, summand)))


def field_grid(sample: SpectrumSample, kind: FieldKind, r: float = 1.0, M: int = None,
               offset: float = 0.0) -> FieldGrid:
    """
    Fill a field on theta_m = 2 pi (m + offset) / M.

    Args:
        sample: Eigenangle sample.
        kind: Field to evaluate.
        r: Radius; the counting function is always at r = 1.
        M: Grid size; defaults to max(4096, 8N).
        offset: Fractional shift of the grid (0.5 gives midpoints).
    """
    M = M or default_grid_size(sample.n)
    theta = TWO_PI * (np.arange(M) + offset) / M
    if kind == FieldKind.LOG_ABS_P:
        values = log_abs_p(sample, r, theta)
    elif kind == FieldKind.PSI:
        values = psi_field(sample, r, theta)
    else:
        values, r = counting_function(sample, theta), 1.0
    logger.debug(f"Filled {kind.value} grid: M={M}, r={r}, N={sample.n}")
    return FieldGrid(kind=kind, r=r, values=values, source=sample, offset=offset)


def _power_sums(angles: np.ndarray, k: np.ndarray) -> np.ndarray:
    """p_k = sum_j e^{-i k theta_j}."""
    out = np.empty(k.size, dtype=complex)
    chunk = max(1, CHUNK_ENTRIES // max(1, angles.size))
    for start in range(0, k.size, chunk):
        out[start:start + chunk] = np.exp(-1j * np.outer(k[start:start + chunk], angles)).sum(axis=1)
    return out


def smoothing_modes(n: int, r: float) -> int:
    """Number of modes after which the tail N r^(K+1) / ((K+1)(1 - r)) drops below SMOOTHING_TAIL."""
    if r == 0.0:
        return 0
    return max(1, int(math.ceil(math.log(SMOOTHING_TAIL * (1.0 - r) / max(1, n)) / math.log(r))))


def poisson_smooth(field: FieldGrid, r_target: float) -> FieldGrid:
    """
    Convolve a boundary field with the Poisson kernel P_r, i.e. damp mode k by r^|k|.

    The boundary modes are taken exactly from the source sample: the series
    F(theta) = -sum_{k>=1} r^k p_k e^{ik theta} / k has real part log|P_N| and
    imaginary part Psi_N at radius r. Modes beyond the grid are folded onto
    their alias so the grid values are exact up to the series tail.

    Raises:
        DomainError: If the field is not a boundary log|P| or Psi field with its
            source sample, or the grid is coarser than 16/(1 - r_target).
    """
    if field.kind not in (FieldKind.LOG_ABS_P, FieldKind.PSI) or field.r != 1.0:
        raise DomainError("Poisson smoothing needs a log_abs_P or Psi field at r=1")
    if field.source is None:
        raise DomainError("Poisson smoothing needs the sample the field was evaluated on")
    if not 0.0 <= r_target < 1.0:
        raise DomainError(f"target radius must lie in [0, 1), got {r_target}")
    if field.M < POISSON_RESOLUTION / (1.0 - r_target):
        raise DomainError(
            f"grid of {field.M} points too coarse for r={r_target}; need M >= {POISSON_RESOLUTION / (1.0 - r_target):.0f}"
        )
    M = field.M
    K = smoothing_modes(field.source.n, r_target)
    if K == 0:
        values = np.zeros(M)
    else:
        k = np.arange(1, K + 1)
        coeffs = -(r_target ** k) * _power_sums(field.source.angles, k) / k
        coeffs = coeffs * np.exp(2j * np.pi * k * field.offset / M)
        bins = k % M
        folded = (np.bincount(bins, weights=coeffs.real, minlength=M)
                  + 1j * np.bincount(bins, weights=coeffs.imag, minlength=M))
        series = M * np.fft.ifft(folded)
        values = series.real if field.kind == FieldKind.LOG_ABS_P else series.imag
    logger.debug(f"Poisson smoothing to r={r_target}: {K} modes folded onto M={M}")
    return FieldGrid(kind=field.kind, r=r_target, values=values, source=field.source, offset=field.offset)


def counting_identity_gap(sample: SpectrumSample, theta) -> float:
    """max |h_N(theta) - (Psi_N(0) - Psi_N(theta)) / pi| over off-spectrum angles theta."""
    theta = np.atleast_1d(np.asarray(theta, dtype=float))
    via_psi = (psi_at_zero(sample) - psi_field(sample, 1.0, theta)) / np.pi
    return float(np.max(np.abs(counting_function(sample, theta) - via_psi)))
