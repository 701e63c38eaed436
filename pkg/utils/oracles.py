# File: utils/oracles.py

"""
Exact finite-N moments, Gaussian limit predictions and tail bounds.
"""

import logging
import math
from typing import Iterable, Tuple

import numpy as np
import pandas as pd
from scipy import special

from models.oracle import GaussianPrediction, MomentKind, MomentQuery
from utils.errors import ConsistencyError, DomainError

logger = logging.getLogger(__name__)

ROUTE_TOLERANCE = 1e-10
ZETA_TAIL_TOLERANCE = 1e-14
EXPLICIT_FACTORS = 16

ORACLE_COLUMNS = ['beta', 'n', 'gamma', 'kind', 'log_moment']


def moment_abs_charpoly(q: MomentQuery) -> float:
    """
    log E|P_N(e^{i theta})|^gamma from the Gamma product
    prod_k Gamma(1 + beta k/2) Gamma(1 + gamma + beta k/2) / Gamma(1 + (beta k + gamma)/2)^2.

    Args:
        q: Query with gamma > -1.

    Returns:
        float: The log-moment, independent of theta.
    """
    if q.kind != MomentKind.ABS_CHARPOLY:
        raise DomainError(f"expected an abs_charpoly query, got {q.kind.value}")
    if q.gamma == 0.0:
        return 0.0
    half = q.beta * np.arange(q.n) / 2.0
    terms = special.gammaln(1.0 + half) + special.gammaln(1.0 + q.gamma + half) \
        - 2.0 * special.gammaln(1.0 + half + q.gamma / 2.0)
    return math.fsum(terms)


def _exp_psi_log_gamma(beta: float, n: int, gamma: float) -> float:
    half = beta * np.arange(n) / 2.0
    terms = 2.0 * special.gammaln(1.0 + half) - 2.0 * special.loggamma(1.0 + half + 0.5j * gamma).real
    return math.fsum(terms)


def _exp_psi_double_product(beta: float, n: int, gamma: float) -> float:
    """
    sum_k sum_{l>=1} log(1 + (gamma/(k beta + 2l))^2): explicit factors for small l, then the
    remaining l-tail as an alternating Hurwitz-zeta series.
    """
    c = abs(gamma) / 2.0
    cut = EXPLICIT_FACTORS + int(math.ceil(4.0 * c))
    half = beta * np.arange(n) / 2.0
    ell = np.arange(1, cut + 1)
    explicit = np.log1p((c / (half[:, None] + ell[None, :])) ** 2).sum(axis=1)

    # sum_{m>=0} log(1 + c^2/(a + m)^2) = sum_j (-1)^{j+1} c^{2j} zeta(2j, a) / j
    a = half + cut + 1.0
    tail = np.zeros(n)
    j = 1
    while True:
        term = (-1.0) ** (j + 1) * c ** (2 * j) * special.zeta(2.0 * j, a) / j
        tail += term
        if np.max(np.abs(term)) < ZETA_TAIL_TOLERANCE / max(n, 1):
            break
        j += 1
    return math.fsum(explicit + tail)


def moment_exp_psi(q: MomentQuery) -> float:
    """
    log E e^{gamma Psi_N(theta)} by complex log-Gamma and by the real double product.

    Raises:
        ConsistencyError: If the two routes disagree by more than 1e-10.
    """
    if q.kind != MomentKind.EXP_PSI:
        raise DomainError(f"expected an exp_psi query, got {q.kind.value}")
    if q.gamma == 0.0:
        return 0.0
    by_gamma = _exp_psi_log_gamma(q.beta, q.n, q.gamma)
    by_product = _exp_psi_double_product(q.beta, q.n, q.gamma)
    gap = abs(by_gamma - by_product)
    if gap > ROUTE_TOLERANCE * max(1.0, abs(by_gamma)):
        logger.error(f"exp_psi routes disagree for {q}: {by_gamma!r} vs {by_product!r}")
        raise ConsistencyError(f"log-Gamma and product routes differ by {gap:.3e} for {q}")
    return by_gamma


def log_moment(q: MomentQuery) -> float:
    if q.kind == MomentKind.ABS_CHARPOLY:
        return moment_abs_charpoly(q)
    return moment_exp_psi(q)


def exp_moment_constant(beta: float) -> float:
    """c_beta with log E e^{gamma Psi_N} <= c_beta gamma^2 + (gamma^2 / 2 beta) log N."""
    return 1.0 / (2.0 * beta) + math.pi ** 2 / 24.0


def exp_moment_bound(beta: float, n: int, gamma: float) -> float:
    return exp_moment_constant(beta) * gamma ** 2 + gamma ** 2 / (2.0 * beta) * math.log(n)


def trace_second_moment(beta: float, n: int) -> float:
    """E|sum_j e^{i theta_j}|^2 = n / (1 + beta (n - 1) / 2)."""
    return n / (1.0 + beta * (n - 1) / 2.0)


def clt_prediction(sigma2: float, beta: float) -> GaussianPrediction:
    """Limiting variance (2/beta) sigma^2 and log-Laplace transform sigma^2/beta."""
    if sigma2 < 0:
        raise DomainError(f"sigma^2 must be nonnegative, got {sigma2}")
    return GaussianPrediction(variance=2.0 * sigma2 / beta, log_laplace=sigma2 / beta)


def gff_covariance(z: complex, z2: complex) -> float:
    """E[G(z) G(z')] = (1/2) log |1 - conj(z) z'|^{-1} inside the unit disk."""
    if abs(z) >= 1.0 or abs(z2) >= 1.0:
        raise DomainError(f"covariance defined inside the unit disk only, got |z|={abs(z)}, |z'|={abs(z2)}")
    return -0.5 * math.log(abs(1.0 - complex(z).conjugate() * complex(z2)))


def maxh_tail_bound(beta: float, n: int, t: float) -> float:
    """min(1, 3n exp(-beta t^2 / log n)) bounding P[max |h_N| >= t]."""
    if n < 2 or t <= 0:
        raise DomainError(f"tail bound needs n >= 2 and t > 0, got n={n}, t={t}")
    return min(1.0, 3.0 * n * math.exp(-beta * t * t / math.log(n)))


def critical_gamma(beta: float) -> float:
    return math.sqrt(2.0 * beta)


def free_energy_prediction(beta: float, gamma: float) -> float:
    """gamma^2 / 2 beta up to gamma* = sqrt(2 beta), sqrt(2 gamma^2 / beta) - 1 beyond."""
    if gamma < 0:
        raise DomainError(f"gamma must be nonnegative, got {gamma}")
    if gamma <= critical_gamma(beta):
        return gamma ** 2 / (2.0 * beta)
    return math.sqrt(2.0 * gamma ** 2 / beta) - 1.0


def rigidity_band(beta: float, n: int, delta: float) -> Tuple[float, float]:
    """Band (2 -/+ delta) sqrt(2/beta) log N / N for max_k |theta_k - 2 pi k / N|."""
    if not 0.0 <= delta < 1.0:
        raise DomainError(f"delta must lie in [0, 1), got {delta}")
    scale = math.sqrt(2.0 / beta) * math.log(n) / n
    return (2.0 - delta) * scale, (2.0 + delta) * scale


def oracle_table(betas: Iterable[float], ns: Iterable[int], gammas: Iterable[float],
                 kinds: Iterable[MomentKind] = tuple(MomentKind)) -> pd.DataFrame:
    """Regression table of log-moments over a parameter grid."""
    rows = []
    for kind in kinds:
        for beta in betas:
            for n in ns:
                for gamma in gammas:
                    if kind == MomentKind.ABS_CHARPOLY and gamma <= -1.0:
                        continue
                    q = MomentQuery(beta=float(beta), n=int(n), gamma=float(gamma), kind=kind)
                    rows.append([q.beta, q.n, q.gamma, kind.value, log_moment(q)])
    logger.info(f"Built oracle table with {len(rows)} rows")
    return pd.DataFrame(rows, columns=ORACLE_COLUMNS)
