# File: tests/test_sampler.py

import numpy as np
import pytest
from scipy import stats

from models.ensemble import TWO_PI, EnsembleSpec, SpectrumSample, VerblunskySeq
from utils import function_library, oracles
from utils.errors import DomainError
from utils.rng import replicate_seed, stream_for
from utils.sampler import (EigenSolver, cmv_matrix, eigenangles, importance_weight, prufer_phase, sample_batch,
                           sample_spectrum, sample_verblunsky)


@pytest.mark.parametrize("beta,n", [(0.5, 1), (1.0, 2), (2.0, 17), (4.0, 64)])
def test_sample_is_sorted_and_in_range(beta, n):
    sample = sample_spectrum(EnsembleSpec(beta=beta, n=n, seed=11))
    assert sample.angles.shape == (n,)
    assert np.all(sample.angles >= 0.0) and np.all(sample.angles < TWO_PI)
    assert np.all(np.diff(sample.angles) > 0.0)


def test_same_seed_same_sample():
    spec = EnsembleSpec(beta=2.0, n=32, seed=replicate_seed(7, 3))
    np.testing.assert_array_equal(sample_spectrum(spec).angles, sample_spectrum(spec).angles)


def test_replicate_seeds_are_distinct_and_stable():
    seeds = [replicate_seed(2024, r) for r in range(100)]
    assert len(set(seeds)) == 100
    assert seeds == [replicate_seed(2024, r) for r in range(100)]
    assert all(0 <= s < 2 ** 64 for s in seeds)


def test_verblunsky_law_shapes():
    seq = sample_verblunsky(EnsembleSpec(beta=1.0, n=10, seed=5))
    assert seq.n == 10
    assert np.all(np.abs(seq.alpha[:-1]) < 1.0)
    assert abs(abs(seq.alpha[-1]) - 1.0) < 1e-14


def test_cmv_matrix_is_unitary():
    seq = sample_verblunsky(EnsembleSpec(beta=2.0, n=9, seed=8))
    C = cmv_matrix(seq.alpha)
    np.testing.assert_allclose(C @ C.conj().T, np.eye(9), atol=1e-12)


@pytest.mark.parametrize("beta,n", [(0.7, 5), (2.0, 40), (6.0, 128)])
def test_prufer_matches_dense_cmv(beta, n):
    seq = sample_verblunsky(EnsembleSpec(beta=beta, n=n, seed=99))
    np.testing.assert_allclose(eigenangles(seq, EigenSolver.PRUFER), eigenangles(seq, EigenSolver.CMV),
                               atol=1e-9)


def test_prufer_phase_is_increasing():
    seq = sample_verblunsky(EnsembleSpec(beta=2.0, n=20, seed=1))
    theta = np.linspace(0.0, TWO_PI, 400)[None, :]
    psi, dpsi = prufer_phase(seq.alpha[None, :], theta)
    assert np.all(np.diff(psi[0]) > 0.0)
    assert np.all(dpsi > 0.0)


def test_single_eigenangle_is_minus_last_phase():
    alpha = np.array([np.exp(-1j * 1.25)])
    np.testing.assert_allclose(eigenangles(VerblunskySeq(alpha=alpha)), [1.25], atol=1e-15)


def test_batch_matches_replicate_by_replicate():
    spec = EnsembleSpec(beta=2.0, n=24)
    angles, seeds = sample_batch(spec, 6, master_seed=13, first_replicate=40)
    assert seeds == [replicate_seed(13, 40 + i) for i in range(6)]
    for row, seed in zip(angles, seeds):
        single = sample_spectrum(spec.with_seed(seed), stream_for(seed))
        np.testing.assert_allclose(row, single.angles, atol=1e-9)


def test_spectrum_sample_validation():
    spec = EnsembleSpec(beta=2.0, n=2)
    with pytest.raises(DomainError):
        SpectrumSample(angles=np.array([1.0, 0.5]), spec=spec)
    with pytest.raises(DomainError):
        SpectrumSample(angles=np.array([0.0, TWO_PI]), spec=spec)
    with pytest.raises(DomainError):
        EnsembleSpec(beta=0.0, n=4)
    with pytest.raises(DomainError):
        EnsembleSpec(beta=1.0, n=0)


def test_centered_angles_lie_in_symmetric_range():
    spec = EnsembleSpec(beta=2.0, n=3)
    sample = SpectrumSample(angles=np.array([0.1, np.pi, 5.0]), spec=spec)
    np.testing.assert_allclose(sample.centered_angles(), [0.1, np.pi, 5.0 - TWO_PI])


@pytest.mark.parametrize("beta,n", [(2.0, 8), (1.0, 6), (4.0, 10)])
def test_trace_second_moment_matches_oracle(beta, n):
    angles, _ = sample_batch(EnsembleSpec(beta=beta, n=n), 4000, master_seed=3)
    trace_sq = np.abs(np.exp(1j * angles).sum(axis=1)) ** 2
    se = trace_sq.std(ddof=1) / np.sqrt(trace_sq.size)
    assert abs(trace_sq.mean() - oracles.trace_second_moment(beta, n)) < 4.0 * se


def test_single_angle_is_uniform():
    angles, _ = sample_batch(EnsembleSpec(beta=3.0, n=1), 2000, master_seed=21)
    # mean of a uniform angle on [0, 2 pi) is pi with sd 2 pi / sqrt(12)
    se = TWO_PI / np.sqrt(12.0 * angles.size)
    assert abs(angles.mean() - np.pi) < 4.0 * se


def test_importance_weight_sums_test_function():
    spec = EnsembleSpec(beta=2.0, n=3)
    sample = SpectrumSample(angles=np.array([0.0, np.pi / 2.0, np.pi]), spec=spec)
    assert importance_weight(sample, function_library.cosine()) == pytest.approx(0.0, abs=1e-15)
    assert importance_weight(sample, function_library.constant(2.0)) == pytest.approx(6.0)


def _randomly_rotated(angles: np.ndarray, rng) -> np.ndarray:
    phi = rng.uniform(0.0, TWO_PI, size=(angles.shape[0], 1))
    return np.sort(np.mod(angles + phi, TWO_PI), axis=1)


def test_eigenangles_are_rotation_invariant():
    angles, _ = sample_batch(EnsembleSpec(beta=2.0, n=8), 3000, master_seed=17)
    rng = np.random.default_rng(1)
    picked = angles[np.arange(angles.shape[0]), rng.integers(0, 8, size=angles.shape[0])]
    assert stats.kstest(picked, stats.uniform(0.0, TWO_PI).cdf).pvalue > 0.001
    # smallest angle before and after an independent uniform rotation
    rotated, _ = sample_batch(EnsembleSpec(beta=2.0, n=8), 3000, master_seed=18)
    assert stats.ks_2samp(angles[:, 0], _randomly_rotated(rotated, rng)[:, 0]).pvalue > 0.001


def test_cyclic_gaps_are_exchangeable():
    n = 6
    angles, _ = sample_batch(EnsembleSpec(beta=1.0, n=n), 3000, master_seed=29)
    rotated = _randomly_rotated(angles, np.random.default_rng(2))
    gaps = np.diff(np.concatenate([rotated, rotated[:, :1] + TWO_PI], axis=1), axis=1)
    # the last gap straddles the origin; weighting by its inverse removes the size bias
    weight = 1.0 / gaps[:, -1]
    hits = np.argmax(gaps, axis=1)[:, None] == np.arange(n)[None, :]
    share = (weight[:, None] * hits).mean(axis=0) / weight.mean()
    residual = weight[:, None] * (hits - 1.0 / n)
    se = residual.std(axis=0, ddof=1) / (np.sqrt(weight.size) * weight.mean())
    assert np.all(np.abs(share - 1.0 / n) < 4.0 * se)
    counts = np.bincount(np.argmax(gaps[:, :-1], axis=1), minlength=n - 1)
    # gaps away from the origin mirror each other: k and n - 2 - k
    for k in range((n - 1) // 2):
        assert stats.chisquare([counts[k], counts[n - 2 - k]]).pvalue > 0.001
