# File: utils/statistics.py

import logging
import math
from typing import NamedTuple

import numpy as np
from scipy import special, stats

from models.run import RunSummary
from utils.errors import DomainError, EssCollapseError

logger = logging.getLogger(__name__)

ESS_WARNING_FRACTION = 0.1


class Reweighted(NamedTuple):
    estimate: float
    std_error: float
    ess: float


class VarianceEstimate(NamedTuple):
    variance: float
    std_error: float


def summarize(values, reference=None) -> RunSummary:
    """
    Mean, standard error and shape statistics of replicate values.

    Args:
        values: Replicate values, at least two.
        reference: Optional frozen scipy distribution for a KS test.

    Returns:
        RunSummary: With estimate = mean and std_error = sd / sqrt(n).

    Raises:
        DomainError: With fewer than two values.
    """
    x = np.asarray(values, dtype=float)
    if x.size < 2:
        raise DomainError(f"need at least two values to summarize, got {x.size}")
    mean = float(np.mean(x))
    sd = float(np.std(x, ddof=1))
    summary = RunSummary(estimate=mean, std_error=sd / math.sqrt(x.size), replicates=int(x.size),
                         n_eff=float(x.size))
    if sd == 0.0:
        logger.warning(f"Degenerate variance over {x.size} values; shape statistics skipped")
        return summary
    summary.skewness = float(stats.skew(x))
    summary.kurtosis = float(stats.kurtosis(x))
    if reference is not None:
        result = stats.kstest(x, reference.cdf)
        summary.ks_statistic = float(result.statistic)
        summary.ks_pvalue = float(result.pvalue)
    return summary


def variance_estimate(values) -> VarianceEstimate:
    """Unbiased sample variance and its standard error from the fourth central moment."""
    x = np.asarray(values, dtype=float)
    n = x.size
    if n < 4:
        raise DomainError(f"need at least four values for a variance standard error, got {n}")
    centered = x - np.mean(x)
    var = float(np.sum(centered ** 2) / (n - 1))
    m4 = float(np.mean(centered ** 4))
    spread = max(m4 - var ** 2 * (n - 3) / (n - 1), 0.0)
    return VarianceEstimate(variance=var, std_error=math.sqrt(spread / n))


def log_laplace_estimate(values, t: float = 1.0) -> VarianceEstimate:
    """log mean exp(t X) and its delta-method standard error."""
    x = t * np.asarray(values, dtype=float)
    log_mean = float(special.logsumexp(x) - math.log(x.size))
    scaled = np.exp(x - log_mean)
    return VarianceEstimate(variance=log_mean, std_error=float(np.std(scaled, ddof=1) / math.sqrt(x.size)))


def effective_sample_size(log_weights) -> float:
    """(sum w)^2 / sum w^2 computed in the log domain."""
    lw = np.asarray(log_weights, dtype=float)
    return float(math.exp(2.0 * special.logsumexp(lw) - special.logsumexp(2.0 * lw)))


def reweighted_mean(values, log_weights, min_ess_fraction: float = 0.0) -> Reweighted:
    """
    Self-normalized importance-sampling estimate of E_w[X].

    Args:
        values: X on unbiased replicates.
        log_weights: log importance weights of the same replicates.
        min_ess_fraction: Raise when ESS / R falls below this fraction.

    Returns:
        Reweighted: (estimate, delta-method standard error, ESS).

    Raises:
        EssCollapseError: If ESS / R < min_ess_fraction.
    """
    x = np.asarray(values, dtype=float)
    lw = np.asarray(log_weights, dtype=float)
    weights = np.exp(lw - special.logsumexp(lw))
    estimate = float(np.sum(weights * x))
    std_error = float(math.sqrt(np.sum(weights ** 2 * (x - estimate) ** 2)))
    ess = effective_sample_size(lw)
    fraction = ess / x.size
    if fraction < ESS_WARNING_FRACTION:
        logger.warning(f"Low effective sample size: ESS={ess:.1f} of {x.size} replicates")
    if fraction < min_ess_fraction:
        raise EssCollapseError(f"ESS {ess:.1f} below {min_ess_fraction:g} of {x.size} replicates")
    return Reweighted(estimate=estimate, std_error=std_error, ess=ess)


def within_sigma(estimate: float, target: float, std_error: float, k: float = 3.0, floor: float = 1e-12) -> bool:
    """|estimate - target| <= k std_error (with an absolute floor for exact cases)."""
    return abs(estimate - target) <= k * std_error + floor
