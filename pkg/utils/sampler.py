# File: utils/sampler.py

"""
Exact sampling of the circular beta-ensemble.

Verblunsky coefficients are drawn from the Killip-Nenciu law and the
eigenangles of the associated CMV matrix are located as level crossings
of the monotone Pruefer phase of the paraorthogonal Szego recursion.
A dense CMV eigensolve is available behind the same contract.
"""

import logging
from enum import Enum

import numpy as np

from models.ensemble import TWO_PI, EnsembleSpec, SpectrumSample, VerblunskySeq
from utils.errors import ConvergenceError
from utils.rng import replicate_seed, stream_for

logger = logging.getLogger(__name__)

BISECTION_REL_TOL = 1e-12
MAX_NEWTON_STEPS = 200
MAX_REDRAWS = 8
GRID_FACTOR = 4


class EigenSolver(Enum):
    PRUFER = 'prufer'
    CMV = 'cmv'


def _draw_alpha(beta: float, n: int, rng: np.random.Generator) -> np.ndarray:
    alpha = np.empty(n, dtype=complex)
    if n > 1:
        k = np.arange(n - 1)
        radius_sq = rng.beta(1.0, beta * (n - k - 1) / 2.0)
        phases = rng.uniform(0.0, TWO_PI, size=n - 1)
        alpha[:-1] = np.sqrt(radius_sq) * np.exp(1j * phases)
    alpha[-1] = np.exp(1j * rng.uniform(0.0, TWO_PI))
    return alpha


def sample_verblunsky(spec: EnsembleSpec, rng_stream: np.random.Generator = None) -> VerblunskySeq:
    """
    Draw Verblunsky coefficients whose CMV spectrum is CbetaE(n).

    |alpha_k|^2 ~ Beta(1, beta(n-k-1)/2) with uniform phase for k < n-1;
    alpha_{n-1} is uniform on the unit circle.

    Args:
        spec: Ensemble parameters.
        rng_stream: Generator to draw from; defaults to the stream of spec.seed.

    Returns:
        VerblunskySeq: The n coefficients.
    """
    rng = rng_stream if rng_stream is not None else stream_for(spec.seed)
    return VerblunskySeq(alpha=_draw_alpha(spec.beta, spec.n, rng))


def prufer_phase(alpha: np.ndarray, theta: np.ndarray):
    """
    Evaluate the Pruefer phase psi_{n-1} and its theta-derivative.

    Args:
        alpha: Verblunsky coefficients, shape (R, n).
        theta: Evaluation angles, shape (R, T).

    Returns:
        tuple: (psi, dpsi), both of shape (R, T).
    """
    alpha = np.atleast_2d(alpha)
    theta = np.atleast_2d(theta)
    psi = theta.copy()
    dpsi = np.ones_like(theta)
    conj_alpha = np.conj(alpha)
    for k in range(alpha.shape[1] - 1):
        u = conj_alpha[:, k:k + 1] * np.exp(-1j * psi)
        one_minus_u = 1.0 - u
        dpsi = 1.0 + dpsi * ((1.0 - np.abs(u) ** 2) / np.abs(one_minus_u) ** 2)
        psi = theta + psi + 2.0 * np.angle(one_minus_u)
    return psi, dpsi


def _prufer_roots(alpha: np.ndarray) -> np.ndarray:
    """Eigenangles for a batch of Verblunsky sequences, shape (R, n), unsorted mod 2pi."""
    n_rep, n = alpha.shape
    eta = -np.angle(alpha[:, -1])
    tol = BISECTION_REL_TOL * TWO_PI / n

    grid = np.linspace(0.0, TWO_PI, GRID_FACTOR * n + 1)
    grid_psi, _ = prufer_phase(alpha, np.broadcast_to(grid, (n_rep, grid.size)))
    psi0 = grid_psi[:, :1]
    m_start = np.ceil((psi0 - eta[:, None]) / TWO_PI)
    targets = eta[:, None] + TWO_PI * (m_start + np.arange(n)[None, :])

    lo = np.empty((n_rep, n))
    hi = np.empty((n_rep, n))
    for r in range(n_rep):
        cell = np.searchsorted(grid_psi[r], targets[r], side='right') - 1
        cell = np.clip(cell, 0, grid.size - 2)
        lo[r] = grid[cell]
        hi[r] = grid[cell + 1]

    x = 0.5 * (lo + hi)
    for step in range(MAX_NEWTON_STEPS):
        psi, dpsi = prufer_phase(alpha, x)
        residual = psi - targets
        below = residual < 0.0
        lo = np.where(below, x, lo)
        hi = np.where(below, hi, x)
        newton = x - residual / dpsi
        inside = (newton > lo) & (newton < hi)
        x_new = np.where(inside, newton, 0.5 * (lo + hi))
        moved = np.abs(x_new - x)
        x = x_new
        if np.all((moved <= tol) | (hi - lo <= tol)):
            logger.debug(f"Pruefer root search converged after {step + 1} steps (n={n}, batch={n_rep})")
            return x
    worst = float(np.max(hi - lo))
    raise ConvergenceError(
        f"Pruefer root search did not converge: n={n}, worst bracket {worst:.3e}, tolerance {tol:.3e}"
    )


def cmv_matrix(alpha: np.ndarray) -> np.ndarray:
    """
    Dense CMV matrix C = L M of a paraorthogonal Verblunsky sequence.

    Args:
        alpha: Coefficients alpha_0..alpha_{n-1}, the last of modulus one.

    Returns:
        np.ndarray: Unitary (n, n) matrix whose characteristic polynomial is Phi_n.
    """
    alpha = np.asarray(alpha, dtype=complex)
    n = alpha.size
    L = np.zeros((n, n), dtype=complex)
    M = np.zeros((n, n), dtype=complex)
    M[0, 0] = 1.0
    for j in range(n):
        target = L if j % 2 == 0 else M
        if j == n - 1:
            target[j, j] = np.conj(alpha[j])
            continue
        rho = np.sqrt(1.0 - abs(alpha[j]) ** 2)
        target[j:j + 2, j:j + 2] = [[np.conj(alpha[j]), rho], [rho, -alpha[j]]]
    return L @ M


def eigenangles_cmv(seq: VerblunskySeq) -> np.ndarray:
    """Sorted eigenangles of the CMV matrix by dense eigensolve."""
    eigenvalues = np.linalg.eigvals(cmv_matrix(seq.alpha))
    return np.sort(np.mod(np.angle(eigenvalues), TWO_PI))


def eigenangles(seq: VerblunskySeq, solver: EigenSolver = EigenSolver.PRUFER) -> np.ndarray:
    """Sorted eigenangles in [0, 2pi) of a Verblunsky sequence."""
    if seq.n == 1:
        return np.array([np.mod(-np.angle(seq.alpha[0]), TWO_PI)])
    if solver == EigenSolver.CMV:
        return eigenangles_cmv(seq)
    return np.sort(np.mod(_prufer_roots(seq.alpha[None, :])[0], TWO_PI))


def _is_simple(angles: np.ndarray) -> bool:
    return bool(angles.size and angles[-1] < TWO_PI and np.all(np.diff(angles) > 0.0))


def sample_spectrum(spec: EnsembleSpec, rng_stream: np.random.Generator = None,
                    solver: EigenSolver = EigenSolver.PRUFER) -> SpectrumSample:
    """
    Draw one sorted CbetaE configuration.

    Args:
        spec: Ensemble parameters; spec.seed seeds the stream when none is given.
        rng_stream: Optional generator.
        solver: Eigenangle extraction route.

    Returns:
        SpectrumSample: Sorted angles with zero log-weight.

    Raises:
        ConvergenceError: If the root search fails or coincident angles persist.
    """
    rng = rng_stream if rng_stream is not None else stream_for(spec.seed)
    redraws = 0
    while True:
        seq = sample_verblunsky(spec, rng)
        angles = np.mod(eigenangles(seq, solver), TWO_PI)
        angles.sort()
        if _is_simple(angles):
            return SpectrumSample(angles=angles, spec=spec, diagnostics={'redraws': redraws})
        redraws += 1
        logger.warning(f"Coincident eigenangles for seed {spec.seed} (n={spec.n}); redraw {redraws}")
        if redraws >= MAX_REDRAWS:
            raise ConvergenceError(f"Coincident eigenangles persisted after {redraws} redraws (seed {spec.seed})")


def sample_batch(spec: EnsembleSpec, replicates: int, master_seed: int, first_replicate: int = 0,
                 solver: EigenSolver = EigenSolver.PRUFER):
    """
    Draw a block of replicates with one stream per replicate.

    Args:
        spec: Ensemble parameters (its seed is ignored).
        replicates: Number of replicates in the block.
        master_seed: Seed of the run.
        first_replicate: Global index of the first replicate of the block.
        solver: Eigenangle extraction route.

    Returns:
        tuple: (angles of shape (replicates, n), list of replicate seeds).
    """
    seeds = [replicate_seed(master_seed, first_replicate + i) for i in range(replicates)]
    streams = [stream_for(seed) for seed in seeds]
    n = spec.n
    if n == 1 or solver == EigenSolver.CMV:
        angles = np.stack([sample_spectrum(spec.with_seed(s), g, solver).angles for s, g in zip(seeds, streams)])
        return angles, seeds

    alpha = np.stack([_draw_alpha(spec.beta, n, g) for g in streams])
    angles = np.sort(np.mod(_prufer_roots(alpha), TWO_PI), axis=1)
    for i in range(replicates):
        redraws = 0
        while not _is_simple(angles[i]):
            redraws += 1
            logger.warning(f"Coincident eigenangles in replicate {first_replicate + i}; redraw {redraws}")
            if redraws >= MAX_REDRAWS:
                raise ConvergenceError(f"Coincident eigenangles persisted in replicate {first_replicate + i}")
            fresh = _draw_alpha(spec.beta, n, streams[i])[None, :]
            angles[i] = np.sort(np.mod(_prufer_roots(fresh)[0], TWO_PI))
    return angles, seeds


def importance_weight(sample: SpectrumSample, w) -> float:
    """
    Log importance weight sum_j w(theta_j) of the tilted measure.

    Args:
        sample: Unbiased sample.
        w: Test function exposing evaluate(theta).

    Returns:
        float: The log-weight.
    """
    return float(np.sum(w.evaluate(sample.angles)))
