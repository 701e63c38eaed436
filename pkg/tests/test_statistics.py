# File: tests/test_statistics.py

import math

import numpy as np
import pytest
from scipy import stats

from utils import statistics
from utils.errors import DomainError, EssCollapseError


def test_summarize_basic():
    summary = statistics.summarize([1.0, 2.0, 3.0, 4.0])
    assert summary.estimate == 2.5
    assert summary.std_error == pytest.approx(np.std([1, 2, 3, 4], ddof=1) / 2.0)
    assert summary.replicates == 4
    lo, hi = summary.ci95
    assert hi - lo == pytest.approx(2 * 1.96 * summary.std_error)


def test_summarize_with_reference_runs_ks_test():
    x = np.random.default_rng(0).standard_normal(500)
    summary = statistics.summarize(x, reference=stats.norm())
    assert summary.ks_pvalue > 1e-3
    assert abs(summary.skewness) < 0.5


def test_summarize_degenerate_and_short_input():
    summary = statistics.summarize([2.0, 2.0, 2.0])
    assert summary.std_error == 0.0 and summary.skewness is None
    with pytest.raises(DomainError):
        statistics.summarize([1.0])


def test_variance_estimate():
    x = np.random.default_rng(1).normal(scale=2.0, size=4000)
    estimate = statistics.variance_estimate(x)
    assert estimate.variance == pytest.approx(np.var(x, ddof=1))
    # the standard error of a normal sample variance is about sigma^2 sqrt(2 / n)
    assert estimate.std_error == pytest.approx(4.0 * math.sqrt(2.0 / 4000), rel=0.15)
    with pytest.raises(DomainError):
        statistics.variance_estimate([1.0, 2.0, 3.0])


def test_log_laplace_of_constant():
    estimate = statistics.log_laplace_estimate([0.5] * 10, t=2.0)
    assert estimate.variance == pytest.approx(1.0)
    assert estimate.std_error == pytest.approx(0.0, abs=1e-15)


def test_equal_weights_give_plain_mean():
    x = np.array([1.0, 4.0, 7.0, 10.0])
    result = statistics.reweighted_mean(x, np.full(4, -3.0))
    assert result.estimate == pytest.approx(5.5)
    assert result.ess == pytest.approx(4.0)


def test_effective_sample_size_of_one_dominant_weight():
    assert statistics.effective_sample_size([0.0, -800.0, -800.0]) == pytest.approx(1.0)


def test_ess_collapse_raises():
    with pytest.raises(EssCollapseError):
        statistics.reweighted_mean([1.0, 2.0, 3.0, 4.0], [50.0, 0.0, 0.0, 0.0], min_ess_fraction=0.5)


def test_within_sigma():
    assert statistics.within_sigma(1.0, 1.2, 0.1)
    assert not statistics.within_sigma(1.0, 1.5, 0.1)
    assert statistics.within_sigma(0.0, 0.0, 0.0)
