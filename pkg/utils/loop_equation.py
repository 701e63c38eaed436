# File: utils/loop_equation.py

"""
Loop-equation functionals of a band-limited test function w with g = U w.

The pair kernel K(x, u) = (g(x) - g(u)) / (2 tan((x - u)/2)) has diagonal
limit g'(x), which is the value used for coincident pairs.
"""

import logging
import math
from typing import NamedTuple

import numpy as np
from scipy import ndimage

from models.ensemble import SpectrumSample
from models.loop_terms import LoopTerms
from models.test_function import CompactFn, PeriodicFn
from utils import harmonic
from utils.errors import ConsistencyError

logger = logging.getLogger(__name__)

MODE_FLOOR = 1e-15
R0_GRID = 1024
RICHARDSON_TOLERANCE = 1e-3
ROW_CHUNK_ENTRIES = 1 << 21
HOLDER_CONSTANT = 1.0
HOLDER_ALPHA_CONSTANT = 2.0 * math.pi


class ConjugatePair(NamedTuple):
    w: PeriodicFn
    g: PeriodicFn
    g1: PeriodicFn
    w1: PeriodicFn


class RFunctionals(NamedTuple):
    R0: float
    R1: float
    R2: float


def conjugate_pair(w: PeriodicFn) -> ConjugatePair:
    g = harmonic.hilbert_circle(w)
    return ConjugatePair(w=w, g=g, g1=harmonic.derivative(g, 1), w1=harmonic.derivative(w, 1))


def effective_degree(f: PeriodicFn) -> int:
    """Highest mode with a coefficient above 1e-15 of the largest."""
    modes = np.abs(f.positive_modes())
    if modes.size == 0 or np.max(modes) == 0.0:
        return 0
    significant = np.nonzero(modes > MODE_FLOOR * np.max(modes))[0]
    return int(significant[-1]) + 1


def pair_kernel(x: np.ndarray, gx: np.ndarray, g1x: np.ndarray, u: np.ndarray, gu: np.ndarray) -> np.ndarray:
    """K(x_i, u_j) as a matrix, with g'(x) wherever x_i == u_j."""
    diff = x[:, None] - u[None, :]
    with np.errstate(divide='ignore', invalid='ignore'):
        kernel = (gx[:, None] - gu[None, :]) / (2.0 * np.tan(diff / 2.0))
    coincident = diff == 0.0
    if np.any(coincident):
        kernel = np.where(coincident, np.broadcast_to(g1x[:, None], kernel.shape), kernel)
    return kernel


def w_functional(sample: SpectrumSample, w: PeriodicFn, t: float, pair: ConjugatePair = None) -> float:
    """
    W_N = (beta/2) sum_{j,k} K(theta_j, theta_k) + (1 - beta/2) sum_j g'(theta_j) + t sum_j (g w')(theta_j).

    Args:
        sample: Eigenangle sample (beta from its spec).
        w: Band-limited test function.
        t: Tilt parameter of the biased measure.
        pair: Precomputed conjugate pair of w.
    """
    pair = pair or conjugate_pair(w)
    beta = sample.beta
    theta = sample.angles
    g_at = pair.g.evaluate(theta)
    g1_at = pair.g1.evaluate(theta)
    quad = np.sum(pair_kernel(theta, g_at, g1_at, theta, g_at))
    linear = np.sum(g1_at)
    cross = np.sum(g_at * pair.w1.evaluate(theta))
    return float(beta / 2.0 * quad + (1.0 - beta / 2.0) * linear + t * cross)


def tilt_mean(pair: ConjugatePair) -> float:
    """int g w' dtheta / 2 pi from coefficients; equals -sigma^2(w)."""
    return float(np.sum(pair.g.fourier * pair.w1.fourier[::-1]).real)


def w_tilde(sample: SpectrumSample, w: PeriodicFn, t: float, pair: ConjugatePair = None) -> LoopTerms:
    """
    Centered functional W~_N with every empirical measure replaced by mu_N - N dtheta/2pi.

    The pair integral against the uniform measure is evaluated on a grid
    fine enough to integrate K(x, .) exactly.
    """
    pair = pair or conjugate_pair(w)
    beta = sample.beta
    n = sample.n
    theta = sample.angles
    degree = max(effective_degree(pair.g), 1)
    grid_size = max(64, 4 * degree + 8)
    u = 2.0 * np.pi * np.arange(grid_size) / grid_size
    g_u = pair.g.evaluate(u)
    g1_u = pair.g1.evaluate(u)

    g_at = pair.g.evaluate(theta)
    g1_at = pair.g1.evaluate(theta)
    empirical = np.sum(pair_kernel(theta, g_at, g1_at, theta, g_at))
    row_means = np.mean(pair_kernel(theta, g_at, g1_at, u, g_u), axis=1)
    uniform = np.mean(pair_kernel(u, g_u, g1_u, u, g_u))
    quad_term = beta / 2.0 * (empirical - 2.0 * n * np.sum(row_means) + n * n * uniform)

    linear_term = (1.0 - beta / 2.0) * (np.sum(g1_at) - n * pair.g1.mean)
    cross_term = t * (np.sum(g_at * pair.w1.evaluate(theta)) - n * tilt_mean(pair))
    return LoopTerms(quad_term=float(quad_term), linear_term=float(linear_term), cross_term=float(cross_term))


def reconstruct_w(sample: SpectrumSample, w: PeriodicFn, t: float, terms: LoopTerms,
                  pair: ConjugatePair = None) -> float:
    """
    W_N = -(N beta/2) int Ug d mu~_N - (N^2 beta/4) int Ug dtheta/2pi + t N int g w' dtheta/2pi + W~_N.
    """
    pair = pair or conjugate_pair(w)
    beta = sample.beta
    n = sample.n
    ug = harmonic.hilbert_circle(pair.g)
    centered = np.sum(ug.evaluate(sample.angles)) - n * ug.mean
    return float(-n * beta / 2.0 * centered - n * n * beta / 4.0 * ug.mean
                 + t * n * tilt_mean(pair) + terms.total)


def check_decomposition(sample: SpectrumSample, w: PeriodicFn, t: float, rel_tol: float = 1e-8) -> float:
    """
    Relative gap between W_N and its reconstruction from W~_N.

    Raises:
        ConsistencyError: If the gap exceeds rel_tol.
    """
    pair = conjugate_pair(w)
    direct = w_functional(sample, w, t, pair)
    rebuilt = reconstruct_w(sample, w, t, w_tilde(sample, w, t, pair), pair)
    gap = abs(direct - rebuilt) / max(1.0, abs(direct))
    if gap > rel_tol:
        logger.error(f"Loop decomposition gap {gap:.3e} on seed {sample.spec.seed}")
        raise ConsistencyError(f"W_N reconstruction differs by {gap:.3e} relative")
    return gap


def _shifted_grid(f: PeriodicFn, M: int, order: int = 0) -> np.ndarray:
    """Values of f^(order) at midpoints (m + 1/2) 2 pi / M."""
    k = np.arange(-f.K, f.K + 1)
    fourier = f.fourier * (1j * k) ** order * np.exp(1j * k * np.pi / M)
    return harmonic.grid_from_coefficients(fourier, M)


def _r0_midpoint(g: PeriodicFn, M: int) -> float:
    h = 2.0 * np.pi / M
    g0 = _shifted_grid(g, M, 0)
    g1 = _shifted_grid(g, M, 1)
    g3 = _shifted_grid(g, M, 3)
    index = np.arange(M)
    rows = max(1, ROW_CHUNK_ENTRIES // M)
    total = 0.0
    for start in range(0, M, rows):
        i = index[start:start + rows]
        d = (i[:, None] - index[None, :]) * h
        d = np.mod(d + np.pi, 2.0 * np.pi) - np.pi
        diagonal = d == 0.0
        half = np.where(diagonal, 1.0, d / 2.0)
        s = np.sin(half)
        c = np.cos(half)
        value = (g0[i, None] - g0[None, :]) * c / (4.0 * s ** 3) - (g1[i, None] + g1[None, :]) / (4.0 * s ** 2)
        taylor = -(g3[i] + g1[i]) / 6.0
        value = np.where(diagonal, np.broadcast_to(taylor[:, None], value.shape), value)
        total += float(np.sum(np.abs(value)))
    return total * h * h


def r0_functional(w: PeriodicFn, M: int = None) -> float:
    """
    R0 by the tensor midpoint rule with a Richardson check on the doubled grid.

    The diagonal uses the Taylor limit -(g''' + g')/6 of the integrand.
    """
    g = harmonic.hilbert_circle(w)
    M = M or max(R0_GRID, 2 * g.K + 2)
    coarse = _r0_midpoint(g, M)
    fine = _r0_midpoint(g, 2 * M)
    extrapolated = fine + (fine - coarse) / 3.0
    if abs(fine - coarse) > RICHARDSON_TOLERANCE * max(abs(fine), 1e-300):
        logger.warning(f"R0 Richardson gap for {w.name}: {coarse:.8g} at M={M} vs {fine:.8g} at M={2 * M}")
    logger.debug(f"R0({w.name}) = {extrapolated:.10g} (M={M}: {coarse:.10g}, M={2 * M}: {fine:.10g})")
    return extrapolated


def _grid_of(f: PeriodicFn, M: int, order: int = 0) -> np.ndarray:
    k = np.arange(-f.K, f.K + 1)
    return harmonic.grid_from_coefficients(f.fourier * (1j * k) ** order, M)


def r_functionals(w: PeriodicFn) -> RFunctionals:
    """
    Error functionals R0, R1 = ||g''||_1 + ||(g w')'||_1 and R2 = ||g'||_inf + ||g||_inf ||w'||_inf.
    """
    g = harmonic.hilbert_circle(w)
    if effective_degree(w) == 0:
        return RFunctionals(R0=0.0, R1=0.0, R2=0.0)
    M = 4 * max(R0_GRID, 2 * w.K + 2)
    step = 2.0 * np.pi / M
    g0, g1, g2 = (_grid_of(g, M, k) for k in range(3))
    w1, w2 = _grid_of(w, M, 1), _grid_of(w, M, 2)
    R1 = float(np.sum(np.abs(g2)) * step + np.sum(np.abs(g1 * w1 + g0 * w2)) * step)
    R2 = float(np.max(np.abs(g1)) + np.max(np.abs(g0)) * np.max(np.abs(w1)))
    return RFunctionals(R0=r0_functional(w), R1=R1, R2=R2)


def r6_bound(w: PeriodicFn, eps: float) -> float:
    """
    (pi^3/4)(eps^-2 ||g||_1 + eps^-1 ||g'||_1 + (eps/3)(||M_eps g'''||_1 + ||g'||_inf)),
    with M_eps the sliding maximum over windows of half-width eps.
    """
    g = harmonic.hilbert_circle(w)
    M = 4 * max(R0_GRID, 2 * w.K + 2)
    step = 2.0 * np.pi / M
    g0, g1, g3 = _grid_of(g, M, 0), _grid_of(g, M, 1), _grid_of(g, M, 3)
    width = 2 * int(math.ceil(eps / step)) + 1
    local_max = ndimage.maximum_filter1d(np.abs(g3), size=width, mode='wrap')
    return float(math.pi ** 3 / 4.0 * (
        np.sum(np.abs(g0)) * step / eps ** 2
        + np.sum(np.abs(g1)) * step / eps
        + eps / 3.0 * (np.sum(local_max) * step + np.max(np.abs(g1)))
    ))


def _line_norms(w: CompactFn, order: int, points: int = 20001):
    x = np.linspace(-w.support_half_width, w.support_half_width, points)
    values = w.derivative(x, order)
    step = x[1] - x[0]
    l1 = float(np.sum(np.abs(values)) * step)
    sup = float(np.max(np.abs(values)))
    lip = float(np.max(np.abs(w.derivative(x, order + 1))))
    return l1, sup, lip


def r8_bound(w: CompactFn, L: float) -> float:
    """
    Mesoscopic growth bound 8 log(pi L)(r_0 + r_1 + r_3 + ||w''||_inf) L for R0(w_L).

    r_k = 2 ||w^(k)||_1 + 2 pi c ||w^(k)||_inf + 2 pi c_a ||w^(k)||_{C^1}, with c = 1 and
    c_a = 2 pi for the Lipschitz exponent.
    """
    total = 0.0
    for order in (0, 1, 3):
        l1, sup, lip = _line_norms(w, order)
        total += 2.0 * l1 + 2.0 * math.pi * HOLDER_CONSTANT * sup \
            + 2.0 * math.pi * HOLDER_ALPHA_CONSTANT * (sup + lip)
    _, w2_sup, _ = _line_norms(w, 2)
    return 8.0 * math.log(math.pi * L) * (total + w2_sup) * L


def error_budget_rhs(R: RFunctionals, n: int) -> float:
    """(R0 log N + R1 + R2 N^-5) log N / N, up to the unspecified constant."""
    log_n = math.log(n)
    return (R.R0 * log_n + R.R1 + R.R2 * n ** -5.0) * log_n / n


def sigma_identity_gap(w: PeriodicFn) -> float:
    """|int g w' dtheta/2pi + sigma^2(w)| for band-limited w."""
    return abs(tilt_mean(conjugate_pair(w)) + harmonic.sigma_sq(w))


def delta_hat(beta: float, n: int, tilted_means) -> float:
    """(2 / beta N) max_t |E_{N,tw}[W~_N]| over the estimated t-grid."""
    return 2.0 / (beta * n) * float(np.max(np.abs(np.asarray(tilted_means, dtype=float))))
