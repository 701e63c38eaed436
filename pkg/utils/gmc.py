# File: utils/gmc.py

"""
Regularized multiplicative-chaos measures of the characteristic polynomial,
their normalizers and mass moments, thick points and the free energy.
"""

import logging
import math
import warnings
from typing import Iterable, List, Sequence, Tuple

import numpy as np
from scipy import integrate, special

from models.ensemble import TWO_PI, SpectrumSample
from models.field import FieldGrid, FieldKind
from models.gmc_measure import GmcMeasureGrid, NormalizerMode
from utils import fields, oracles
from utils.errors import ConvergenceError, DomainError, GmcRegimeError

logger = logging.getLogger(__name__)

RADIUS_PRESETS = (0.9, 0.99, 0.999)
L2_THRESHOLD = 2.0
GRID_POINTS_PER_WIDTH = 8

FIELD_ALIASES = {'abs': FieldKind.LOG_ABS_P, 'psi': FieldKind.PSI}
_SUPERCRITICAL_SEEN = set()


def resolve_field_kind(field_kind) -> FieldKind:
    if isinstance(field_kind, FieldKind):
        return field_kind
    if field_kind in FIELD_ALIASES:
        return FIELD_ALIASES[field_kind]
    try:
        return FieldKind(field_kind)
    except ValueError:
        raise DomainError(f"unknown GMC field kind '{field_kind}'; use 'abs' or 'psi'")


def default_radius(n: int, delta: float = 2.0) -> float:
    """r = 1 - (log N)^delta / N."""
    r = 1.0 - math.log(n) ** delta / n
    if not 0.0 < r < 1.0:
        raise DomainError(f"default radius 1 - (log {n})^{delta:g}/{n} = {r:.4g} is outside (0, 1)")
    return r


def measure_grid_size(n: int, r: float) -> int:
    """Resolve both the eigenangle spacing and the smoothing width 1 - r."""
    return max(fields.default_grid_size(n), int(math.ceil(GRID_POINTS_PER_WIDTH * TWO_PI / (1.0 - r))))


def asymptotic_normalizer(gamma: float, r: float, beta: float) -> float:
    """Gaussian-limit normalizer E|P_N(r e^{i theta})|^gamma ~ (1 - r^2)^{-gamma^2 / 2 beta}."""
    return (1.0 - r * r) ** (-gamma * gamma / (2.0 * beta))


def _log_field(sample: SpectrumSample, r: float, kind: FieldKind, M: int) -> np.ndarray:
    return fields.field_grid(sample, kind, r=r, M=M).values


def log_partition(field: FieldGrid, gamma: float) -> float:
    """log of the grid mean of exp(gamma field)."""
    return float(special.logsumexp(gamma * field.values) - math.log(field.M))


def log_normalizer(log_masses) -> float:
    """log of the replicate mean of unnormalized total masses given in the log domain."""
    log_masses = np.asarray(log_masses, dtype=float)
    if log_masses.size == 0:
        raise DomainError("normalizer estimate needs at least one replicate")
    return float(special.logsumexp(log_masses) - math.log(log_masses.size))


def estimate_normalizer(samples: Sequence[SpectrumSample], gamma: float, r: float, field_kind='abs',
                        M: int = None) -> float:
    """
    Replicate mean of the grid mean of exp(gamma field), computed in the log domain.

    Rotation invariance makes the pointwise expectation the same at every
    grid angle, so the grid mean is used as the per-replicate estimate.
    """
    if not samples:
        raise DomainError("normalizer estimate needs at least one sample")
    kind = resolve_field_kind(field_kind)
    M = M or measure_grid_size(samples[0].n, r)
    log_value = log_normalizer([log_partition(fields.field_grid(s, kind, r=r, M=M), gamma) for s in samples])
    logger.debug(f"Monte Carlo normalizer over {len(samples)} replicates: log value {log_value:.10g}")
    return math.exp(log_value)


def build_measure(sample: SpectrumSample, gamma: float, r: float, field_kind='abs',
                  normalizer_mode=NormalizerMode.ASYMPTOTIC, normalizer_value: float = None,
                  M: int = None, field: FieldGrid = None) -> GmcMeasureGrid:
    """
    Density exp(gamma field(theta_m)) / normalizer on a uniform grid.

    Args:
        sample: Eigenangle sample.
        gamma: Multiplier; supercritical values beyond sqrt(2 beta) are allowed with a warning.
        r: Regularization radius in (0, 1).
        field_kind: 'abs' for log|P_N| or 'psi' for Psi_N.
        normalizer_mode: monte_carlo or asymptotic.
        normalizer_value: Required under monte_carlo (see estimate_normalizer).
        M: Grid size.
        field: Field already evaluated at radius r on an unshifted grid; reused instead of M.

    Returns:
        GmcMeasureGrid: Measure with log-domain weights.
    """
    mode = NormalizerMode(normalizer_mode) if isinstance(normalizer_mode, str) else normalizer_mode
    kind = resolve_field_kind(field_kind)
    if not 0.0 < r < 1.0:
        raise DomainError(f"GMC radius must lie in (0, 1), got {r}")
    if abs(gamma) > oracles.critical_gamma(sample.beta) and (gamma, sample.beta) not in _SUPERCRITICAL_SEEN:
        _SUPERCRITICAL_SEEN.add((gamma, sample.beta))
        logger.warning(f"gamma={gamma} is supercritical for beta={sample.beta} "
                       f"(critical {oracles.critical_gamma(sample.beta):.4f})")
    if mode == NormalizerMode.ASYMPTOTIC:
        normalizer_value = asymptotic_normalizer(gamma, r, sample.beta)
    elif normalizer_value is None:
        raise DomainError("monte_carlo normalizer mode needs a normalizer_value from estimate_normalizer")
    if field is not None:
        if field.kind != kind or field.r != r or field.offset != 0.0:
            raise DomainError(f"field ({field.kind.value}, r={field.r}, offset={field.offset}) does not match "
                              f"the measure ({kind.value}, r={r})")
        M = field.M
    M = M or measure_grid_size(sample.n, r)
    if gamma == 0.0:
        log_weights = np.full(M, -math.log(normalizer_value))
    else:
        values = field.values if field is not None else _log_field(sample, r, kind, M)
        log_weights = gamma * values - math.log(normalizer_value)
    return GmcMeasureGrid(gamma=gamma, r=r, log_weights=log_weights, normalizer_mode=mode,
                          normalizer_value=normalizer_value)


def _overlap_length(delta: float, arc_a: Tuple[float, float], arc_b: Tuple[float, float]) -> float:
    """Length of {theta in A : theta - delta in B} on the circle."""
    a1, a2 = arc_a
    b1, b2 = arc_b
    total = 0.0
    for shift in (-2.0 * TWO_PI, -TWO_PI, 0.0, TWO_PI, 2.0 * TWO_PI):
        lo = max(a1, b1 + delta + shift)
        hi = min(a2, b2 + delta + shift)
        if hi > lo:
            total += hi - lo
    return total


def mass_second_moment(gamma: float, r: float, beta: float, arcs) -> float:
    """
    Gaussian prediction of E[mu(A) mu(B)]:
    int_{A x B} |1 - r^2 e^{i(theta - theta')}|^{-gamma^2/beta} dtheta dtheta' / (2 pi)^2.

    The double integral reduces to one integral over the separation weighted
    by the overlap length of A with B shifted.

    Raises:
        GmcRegimeError: If gamma^2 / beta >= 2, where the prediction is withheld.
        ConvergenceError: If the quadrature does not converge.
    """
    (a1, a2), (b1, b2) = (tuple(map(float, arc)) for arc in arcs)
    if not (a2 > a1 and b2 > b1):
        raise DomainError(f"arcs must be increasing intervals, got {arcs}")
    exponent = gamma * gamma / beta
    if exponent >= L2_THRESHOLD:
        raise GmcRegimeError(f"gamma^2/beta = {exponent:.4g} >= {L2_THRESHOLD:g}: second moment prediction withheld")
    if gamma == 0.0:
        return (a2 - a1) * (b2 - b1) / TWO_PI ** 2
    arc_a, arc_b = (a1, a2), (b1, b2)

    def integrand(delta):
        return _overlap_length(delta, arc_a, arc_b) * abs(1.0 - r * r * np.exp(1j * delta)) ** (-exponent)

    kinks = {a1 - b1, a1 - b2, a2 - b1, a2 - b2}
    points = sorted({float(np.mod(k, TWO_PI)) for k in kinks} - {0.0, TWO_PI})
    try:
        with warnings.catch_warnings():
            warnings.simplefilter('error', integrate.IntegrationWarning)
            value, _ = integrate.quad(integrand, 0.0, TWO_PI, points=points or None, limit=500,
                                      epsabs=1e-13, epsrel=1e-10)
    except integrate.IntegrationWarning as e:
        logger.error(f"Second-moment quadrature failed at gamma={gamma}, r={r}: {str(e)}")
        raise ConvergenceError(f"second-moment quadrature did not converge: {str(e)}")
    return value / TWO_PI ** 2


def boundary_field(sample: SpectrumSample, field_kind='abs', M: int = None) -> FieldGrid:
    """Field at r = 1 on cell midpoints, so no grid angle falls on an eigenangle."""
    M = M or fields.default_grid_size(sample.n)
    return fields.field_grid(sample, resolve_field_kind(field_kind), r=1.0, M=M, offset=0.5)


def thick_point_measure(sample: SpectrumSample, gamma: float, field_kind='abs', M: int = None,
                        field: FieldGrid = None) -> float:
    """
    Lebesgue measure (in radians) of {theta : field(theta) >= (gamma/beta) log N} at r = 1.

    A precomputed boundary_field may be passed to share it across gammas.
    """
    if not gamma > 0:
        raise DomainError(f"thick points need gamma > 0, got {gamma}")
    field = field if field is not None else boundary_field(sample, field_kind, M)
    level = gamma / sample.beta * math.log(sample.n)
    return TWO_PI * float(np.count_nonzero(field.values >= level)) / field.M


def log_thick_ratio(sample: SpectrumSample, gamma: float, field_kind='abs', M: int = None,
                    field: FieldGrid = None) -> float:
    """log |T| / log N, -inf when the grid finds no thick point."""
    measure = thick_point_measure(sample, gamma, field_kind, M, field)
    if measure == 0.0:
        return -math.inf
    return math.log(measure) / math.log(sample.n)


def free_energy(samples: Sequence[SpectrumSample], gamma: float, M: int = None) -> float:
    """
    Replicate mean of (1/log N) log int |P_N(e^{i theta})|^gamma dtheta/2pi,
    the integral taken on a midpoint grid.
    """
    values = free_energy_values(samples, gamma, M)
    return float(np.mean(values))


def free_energy_values(samples: Sequence[SpectrumSample], gamma: float, M: int = None,
                       boundaries: Sequence[FieldGrid] = None) -> np.ndarray:
    """Per-sample free energies; ``boundaries`` holds precomputed boundary_field grids of the samples."""
    if gamma < 0:
        raise DomainError(f"free energy needs gamma >= 0, got {gamma}")
    if not samples:
        raise DomainError("free energy needs at least one sample")
    if gamma == 0.0:
        return np.zeros(len(samples))
    if boundaries is None:
        boundaries = [boundary_field(s, FieldKind.LOG_ABS_P, M) for s in samples]
    elif len(boundaries) != len(samples) or any(b.kind != FieldKind.LOG_ABS_P for b in boundaries):
        raise DomainError("free energy needs one log_abs_P boundary grid per sample")
    return np.asarray([log_partition(b, gamma) / math.log(s.n) for s, b in zip(samples, boundaries)])


def free_energy_curve(samples: Sequence[SpectrumSample], gammas: Iterable[float], M: int = None) -> List[float]:
    return [free_energy(samples, g, M) for g in gammas]


def secant_slopes(gammas: Sequence[float], values: Sequence[float], pivot: float) -> Tuple[float, float]:
    """Slopes of the secants left and right of the pivot gamma."""
    g = np.asarray(gammas, dtype=float)
    v = np.asarray(values, dtype=float)
    left = g <= pivot
    right = g >= pivot
    if np.count_nonzero(left) < 2 or np.count_nonzero(right) < 2:
        raise DomainError(f"need two gammas on each side of {pivot} for secant slopes")
    gl, vl = g[left], v[left]
    gr, vr = g[right], v[right]
    return (float((vl[-1] - vl[0]) / (gl[-1] - gl[0])), float((vr[-1] - vr[0]) / (gr[-1] - gr[0])))
