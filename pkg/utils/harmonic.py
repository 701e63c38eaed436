# File: utils/harmonic.py

"""
Fourier analysis on the circle and the line.

Circle transforms act on PeriodicFn coefficient tables; the line Hilbert
transform and the H^{1/2} norm act on compactly supported CompactFn objects.
"""

import logging
import math
import warnings

import numpy as np
from scipy import integrate

from models.test_function import CompactFn, MesoScaledFn, PeriodicFn
from utils.errors import ConvergenceError, DomainError, SupportOverflowError, TailTruncationError

logger = logging.getLogger(__name__)

ALIASING_THRESHOLD = 1e-8
SIGMA_TAIL_TOLERANCE = 1e-6
ENVELOPE_FLOOR = 1e-13
LINE_TAIL_TOLERANCE = 1e-8
LINE_POINTS_PER_SUPPORT = 8192
LINE_PADDING = 64
DEFAULT_CIRCLE_GRID = 1024


def coefficients_from_grid(grid: np.ndarray, K: int) -> np.ndarray:
    """Discrete Fourier coefficients f_hat_{-K..K} of uniform-grid samples."""
    grid = np.asarray(grid, dtype=float)
    spectrum = np.fft.fft(grid) / grid.size
    k = np.arange(-K, K + 1)
    return spectrum[np.mod(k, grid.size)]


def grid_from_coefficients(fourier: np.ndarray, M: int) -> np.ndarray:
    """Values at theta_m = 2 pi m / M of the trigonometric polynomial with the given coefficients."""
    K = fourier.size // 2
    spectrum = np.zeros(M, dtype=complex)
    k = np.arange(-K, K + 1)
    np.add.at(spectrum, np.mod(k, M), fourier)
    return (np.fft.ifft(spectrum) * M).real


def periodic_from_callable(func, M: int = DEFAULT_CIRCLE_GRID, K: int = None, name: str = 'periodic',
                           exact: bool = True) -> PeriodicFn:
    """
    Build a PeriodicFn by sampling a vectorized callable on the uniform grid.

    Args:
        func: Callable of theta.
        M: Grid size.
        K: Highest retained mode; defaults to M//2 - 1.
        name: Label carried by the function.
        exact: Keep ``func`` for pointwise evaluation.

    Returns:
        PeriodicFn: Sampled function.
    """
    if K is None:
        K = M // 2 - 1
    if M < 2 * K + 2:
        raise DomainError(f"grid size M={M} cannot resolve K={K}; need M >= 2K+2")
    theta = 2.0 * np.pi * np.arange(M) / M
    grid = np.asarray(func(theta), dtype=float)
    return PeriodicFn(fourier=coefficients_from_grid(grid, K), grid=grid,
                      func=func if exact else None, name=name)


def periodic_from_coefficients(fourier: np.ndarray, M: int = None, name: str = 'periodic') -> PeriodicFn:
    fourier = np.asarray(fourier, dtype=complex)
    K = fourier.size // 2
    M = M or max(DEFAULT_CIRCLE_GRID, 2 * K + 2)
    return PeriodicFn(fourier=fourier, grid=grid_from_coefficients(fourier, M), name=name)


def fourier_coeffs(f: PeriodicFn, K: int) -> np.ndarray:
    """
    Coefficients f_hat_{-K..K} (index k + K) by discrete transform of the grid.

    Exact for trigonometric polynomials of degree <= K.

    Raises:
        DomainError: If the grid is too coarse for K.
    """
    if f.M < 2 * K + 2:
        raise DomainError(f"grid size M={f.M} cannot resolve K={K}; need M >= 2K+2")
    coeffs = coefficients_from_grid(f.grid, K)
    peak = np.max(np.abs(coeffs))
    if K > 0 and peak > 0 and abs(coeffs[-1]) > ALIASING_THRESHOLD * peak:
        logger.warning(
            f"Possible aliasing in {f.name}: |f_hat_K|={abs(coeffs[-1]):.3e} exceeds "
            f"{ALIASING_THRESHOLD:g} of the largest coefficient at K={K}"
        )
    return coeffs


def sigma_sq_with_tail(f: PeriodicFn):
    """
    sigma^2(f) = 2 sum_k k |f_hat_k|^2 over the retained modes and an estimate of the dropped tail.

    The tail is extrapolated from a power-law fit of the coefficient
    envelope on (K/2, 3K/4] and (3K/4, K].

    Returns:
        tuple: (value, tail_estimate)
    """
    modes = np.abs(f.positive_modes())
    K = modes.size
    k = np.arange(1, K + 1)
    value = float(math.fsum(2.0 * k * modes ** 2))
    if K < 8:
        return value, 0.0
    peak = float(np.max(modes)) if K else 0.0
    first = modes[K // 2: (3 * K) // 4]
    second = modes[(3 * K) // 4:]
    env_first = float(np.max(first))
    env_second = float(np.max(second))
    if peak == 0.0 or env_second <= ENVELOPE_FLOOR * peak:
        return value, 0.0
    k_first = 5.0 * K / 8.0
    k_second = 7.0 * K / 8.0
    if env_first <= env_second:
        raise TailTruncationError(f"Fourier coefficients of {f.name} do not decay; sigma^2 tail unbounded")
    p = math.log(env_first / env_second) / math.log(k_second / k_first)
    if p <= 1.0:
        raise TailTruncationError(f"Coefficient decay exponent {p:.3f} of {f.name} too slow for sigma^2")
    edge = env_second * (k_second / K) ** p
    tail = edge ** 2 * K ** 2 / (p - 1.0)
    return value, tail


def sigma_sq(f: PeriodicFn) -> float:
    """
    Variance functional sigma(f)^2 = 2 sum_{k>=1} k |f_hat_k|^2.

    Raises:
        TailTruncationError: If the estimated truncation exceeds 1e-6 relative.
    """
    value, tail = sigma_sq_with_tail(f)
    if tail > SIGMA_TAIL_TOLERANCE * max(value, np.finfo(float).tiny):
        raise TailTruncationError(
            f"sigma^2 truncation tail {tail:.3e} of {f.name} exceeds {SIGMA_TAIL_TOLERANCE:g} relative "
            f"(value {value:.6e}); refine the grid"
        )
    return value + tail


def _multiply_modes(f: PeriodicFn, multiplier: np.ndarray, name: str) -> PeriodicFn:
    fourier = f.fourier * multiplier
    return PeriodicFn(fourier=fourier, grid=grid_from_coefficients(fourier, f.M), name=name)


def hilbert_circle(f: PeriodicFn) -> PeriodicFn:
    """Circle Hilbert transform: multiply f_hat_k by -i sgn(k)."""
    k = np.arange(-f.K, f.K + 1)
    return _multiply_modes(f, -1j * np.sign(k), f"U[{f.name}]")


def derivative(f: PeriodicFn, order: int = 1) -> PeriodicFn:
    """Derivative in coefficient space, (ik)^order f_hat_k."""
    k = np.arange(-f.K, f.K + 1)
    return _multiply_modes(f, (1j * k) ** order, f"d{order}[{f.name}]")


def hilbert_line_scaled(w: CompactFn, L: float, x: float) -> float:
    """
    Scaled line Hilbert transform U_L w(x) = (1/2 pi L) PV int w(t) cot((x - t)/2L) dt.

    The principal value is taken by subtracting w(x) inside the support, so
    that g_L(theta) = U_L w(L theta) equals the circle transform of w_L.

    Args:
        w: Compactly supported function with support inside [-pi L/2, pi L/2].
        L: Mesoscopic scale.
        x: Evaluation point.

    Returns:
        float: The transform at x.

    Raises:
        SupportOverflowError: If the support is too wide for L.
        ConvergenceError: If quadrature fails.
    """
    S = w.support_half_width
    if S > np.pi * L / 2.0 + 1e-12:
        raise SupportOverflowError(f"support {S} exceeds pi L / 2 = {np.pi * L / 2.0}")
    x = float(x)
    two_l = 2.0 * L
    breaks = sorted({b for b in w.breakpoints if -S < b < S})
    try:
        with warnings.catch_warnings():
            warnings.simplefilter('error', integrate.IntegrationWarning)
            if abs(x) >= S:
                value, err = integrate.quad(lambda t: float(w.evaluate(t)) / math.tan((x - t) / two_l),
                                            -S, S, points=breaks or None, limit=400,
                                            epsabs=1e-14, epsrel=1e-12)
            else:
                wx = float(w.evaluate(x))
                slope = float(w.derivative(x, 1))

                def regular(t):
                    if t == x:
                        return -two_l * slope
                    return (float(w.evaluate(t)) - wx) / math.tan((x - t) / two_l)

                value, err = integrate.quad(regular, -S, S, points=sorted(set(breaks + [x])), limit=400,
                                            epsabs=1e-14, epsrel=1e-12)
                value += wx * two_l * math.log(abs(math.sin((x + S) / two_l) / math.sin((x - S) / two_l)))
    except integrate.IntegrationWarning as e:
        logger.error(f"Line Hilbert quadrature failed for {w.name} at x={x}: {str(e)}")
        raise ConvergenceError(f"line Hilbert quadrature did not converge at x={x}: {str(e)}")
    return value / (2.0 * np.pi * L)


def line_fourier_modulus(w: CompactFn):
    """
    |w_hat(xi)| with w_hat(xi) = int w(x) e^{-ix xi} dx / 2 pi on a uniform frequency grid.

    Returns:
        tuple: (xi, modulus) for xi in [0, pi/dx].
    """
    S = w.support_half_width
    dx = S / LINE_POINTS_PER_SUPPORT
    n_pts = LINE_PADDING * LINE_POINTS_PER_SUPPORT
    x = -0.5 * LINE_PADDING * S + dx * np.arange(n_pts)
    values = w.evaluate(x)
    spectrum = np.fft.rfft(values)
    xi = 2.0 * np.pi * np.arange(spectrum.size) / (n_pts * dx)
    return xi, np.abs(spectrum) * dx / (2.0 * np.pi)


def h_half_norm_with_tail(w: CompactFn):
    """
    ||w||^2_{H^{1/2}} = 2 int_0^inf xi |w_hat(xi)|^2 dxi and the extrapolated tail beyond the cutoff.

    Returns:
        tuple: (value including tail, tail estimate, cutoff)
    """
    xi, modulus = line_fourier_modulus(w)
    cutoff_index = (xi.size - 1) // 4
    cutoff_index -= cutoff_index % 4
    density = 2.0 * xi * modulus ** 2
    body = float(integrate.simpson(density[:cutoff_index + 1], x=xi[:cutoff_index + 1]))
    quarter = cutoff_index // 4
    half = cutoff_index // 2
    upper = float(integrate.simpson(density[half:cutoff_index + 1], x=xi[half:cutoff_index + 1]))
    lower = float(integrate.simpson(density[quarter:half + 1], x=xi[quarter:half + 1]))
    if upper <= 1e-16 * max(body, np.finfo(float).tiny):
        tail = 0.0
    else:
        ratio = lower / upper
        if ratio <= 1.0:
            raise TailTruncationError(f"spectrum of {w.name} does not decay above xi={xi[half]:.3g}")
        tail = upper / (ratio - 1.0)
    cutoff = float(xi[cutoff_index])
    if tail > LINE_TAIL_TOLERANCE and tail > 1e-6 * body:
        raise TailTruncationError(
            f"H^1/2 tail {tail:.3e} beyond xi={cutoff:.3g} exceeds tolerance for {w.name}"
        )
    logger.debug(f"H^1/2 norm of {w.name}: body {body:.12g}, tail {tail:.3e}, cutoff {cutoff:.4g}")
    return body + tail, tail, cutoff


def h_half_norm(w: CompactFn) -> float:
    """
    Squared H^{1/2}(R) seminorm 2 int_0^inf xi |w_hat(xi)|^2 dxi.

    The line transform is a padded uniform-grid quadrature on [-S, S]
    evaluated by FFT; the frequency tail is extrapolated by a power-law fit.

    Raises:
        TailTruncationError: If the tail bound exceeds tolerance.
    """
    value, _, _ = h_half_norm_with_tail(w)
    return value


def line_hilbert(w: CompactFn, x: float) -> float:
    """H w(x) = (1/pi) PV int w(t)/(x - t) dt, by singularity subtraction."""
    S = w.support_half_width
    x = float(x)
    breaks = sorted({b for b in w.breakpoints if -S < b < S})
    if abs(x) >= S:
        value, _ = integrate.quad(lambda t: float(w.evaluate(t)) / (x - t), -S, S,
                                  points=breaks or None, limit=400, epsabs=1e-14, epsrel=1e-12)
        return value / np.pi
    wx = float(w.evaluate(x))
    slope = float(w.derivative(x, 1))

    def regular(t):
        if t == x:
            return -slope
        return (float(w.evaluate(t)) - wx) / (x - t)

    value, _ = integrate.quad(regular, -S, S, points=sorted(set(breaks + [x])), limit=400,
                              epsabs=1e-14, epsrel=1e-12)
    if wx != 0.0:
        value += wx * math.log(abs((x + S) / (x - S)))
    return value / np.pi


def h_half_norm_hilbert(w: CompactFn) -> float:
    """
    Alternative H^{1/2} norm -(1/2 pi) int H w(x) w'(x) dx.

    With H having multiplier -i sgn(xi), int H w w' dx is minus the norm.
    """
    S = w.support_half_width
    breaks = sorted({b for b in w.breakpoints if -S < b < S})
    value, _ = integrate.quad(lambda x: line_hilbert(w, x) * float(w.derivative(x, 1)), -S, S,
                              points=breaks or None, limit=400, epsabs=1e-13, epsrel=1e-10)
    return -value / (2.0 * np.pi)


def meso_grid_size(L: float) -> int:
    return max(DEFAULT_CIRCLE_GRID, 64 * int(math.ceil(L)))


def meso_wrap(m: MesoScaledFn, M: int = None) -> PeriodicFn:
    """
    theta -> w(L theta) as a PeriodicFn on a grid resolving the scale 1/L.

    Args:
        m: Scaled function (construction already checks the support fits in [-pi, pi]).
        M: Grid size; defaults to max(1024, 64 L).

    Returns:
        PeriodicFn: Wrapped function with exact pointwise evaluation.
    """
    M = M or meso_grid_size(m.scale)
    return periodic_from_callable(m.evaluate, M=M, name=f"{m.base.name}@L={m.scale:g}")
