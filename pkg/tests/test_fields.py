# File: tests/test_fields.py

import math

import numpy as np
import pytest

from models.ensemble import TWO_PI, EnsembleSpec, SpectrumSample
from models.field import FieldGrid, FieldKind
from utils import fields
from utils.errors import DomainError, SingularEvaluationError
from utils.kernels import KernelFamily
from utils.sampler import sample_spectrum


@pytest.fixture
def sample():
    return sample_spectrum(EnsembleSpec(beta=2.0, n=50, seed=17))


def _fixed(angles, beta=2.0):
    angles = np.asarray(angles, dtype=float)
    return SpectrumSample(angles=angles, spec=EnsembleSpec(beta=beta, n=angles.size))


def test_zero_radius_fields_vanish(sample):
    assert fields.log_abs_p(sample, 0.0, 1.3) == 0.0
    assert fields.psi_field(sample, 0.0, 1.3) == 0.0


def test_log_abs_p_matches_polynomial(sample):
    theta = np.array([0.3, 2.0, 4.1])
    r = 0.8
    z = r * np.exp(1j * theta)
    direct = np.log(np.abs(np.prod(1.0 - z[:, None] * np.exp(-1j * sample.angles)[None, :], axis=1)))
    np.testing.assert_allclose(fields.log_abs_p(sample, r, theta), direct, atol=1e-10)


def test_log_abs_p_has_zero_circle_mean(sample):
    grid = fields.field_grid(sample, FieldKind.LOG_ABS_P, r=0.7, M=4096)
    assert float(np.mean(grid.values)) == pytest.approx(0.0, abs=1e-10)


def test_psi_field_uses_kernel_sign(sample):
    r = 0.6
    theta = np.array([0.1, 1.7, 5.5])
    kernel = KernelFamily(r)
    expected = -np.array([np.sum(kernel.kernel_eval('psi', t - sample.angles)) for t in theta])
    np.testing.assert_allclose(fields.psi_field(sample, r, theta), expected, atol=1e-12)


def test_boundary_psi_is_sawtooth_midpoint():
    single = _fixed([1.0])
    assert fields.psi_field(single, 1.0, 1.0 + math.pi) == pytest.approx(0.0, abs=1e-15)
    with pytest.raises(SingularEvaluationError):
        fields.psi_field(single, 1.0, 1.0)
    with pytest.raises(SingularEvaluationError):
        fields.log_abs_p(single, 1.0, 1.0)


def test_psi_at_zero_matches_field(sample):
    assert fields.psi_at_zero(sample) == pytest.approx(fields.psi_field(sample, 1.0, 0.0), abs=1e-12)


def test_counting_function_values():
    s = _fixed([0.5, 2.0, 4.0])
    assert fields.counting_function(s, 0.0) == 0.0
    assert fields.counting_function(s, 2.0) == pytest.approx(2.0 - 3.0 * 2.0 / TWO_PI)
    np.testing.assert_allclose(fields.counting_function(s, np.array([0.4, 3.0])),
                               [-3.0 * 0.4 / TWO_PI, 2.0 - 9.0 / TWO_PI])


def test_max_abs_counting_dominates_grid(sample):
    theta = np.linspace(0.0, TWO_PI, 20001, endpoint=False)
    on_grid = float(np.max(np.abs(fields.counting_function(sample, theta))))
    exact = fields.max_abs_counting(sample)
    assert exact >= on_grid - 1e-12
    assert exact - on_grid < 0.05


def test_max_psi_exact_dominates_grid(sample):
    theta = (np.arange(20000) + 0.5) * TWO_PI / 20000
    values = fields.psi_field(sample, 1.0, theta)
    extrema = fields.max_psi_exact(sample)
    assert extrema.max >= values.max() - 1e-12
    assert extrema.min <= values.min() + 1e-12
    assert extrema.max - values.max() < 0.05
    assert values.min() - extrema.min < 0.05


def test_max_logp_grid_is_close_to_fine_grid(sample):
    theta = (np.arange(40000) + 0.5) * TWO_PI / 40000
    fine = float(np.max(fields.log_abs_p(sample, 1.0, theta)))
    coarse = fields.max_logp_grid(sample, 2)
    assert coarse <= fine + 1e-3
    assert fine - coarse <= math.log(14.0)
    with pytest.raises(DomainError):
        fields.max_logp_grid(sample, 1)


def test_field_grid_default_size_and_frame(sample):
    grid = fields.field_grid(sample, FieldKind.COUNTING)
    assert grid.M == fields.default_grid_size(sample.n) == 4096
    assert grid.r == 1.0
    frame = grid.to_frame()
    assert list(frame.columns) == ['theta', 'value']
    assert grid.metadata()['seed'] == 17


@pytest.mark.parametrize('kind, direct', [
    (FieldKind.LOG_ABS_P, fields.log_abs_p),
    (FieldKind.PSI, fields.psi_field),
])
@pytest.mark.parametrize('r, M', [(0.5, 32), (0.9, 161), (0.9, 1 << 12)])
def test_poisson_smoothing_matches_direct_evaluation(sample, kind, direct, r, M):
    boundary = fields.field_grid(sample, kind, r=1.0, M=M, offset=0.5)
    smoothed = fields.poisson_smooth(boundary, r)
    assert smoothed.r == r
    np.testing.assert_allclose(smoothed.values, direct(sample, r, smoothed.theta()), rtol=0.0, atol=1e-4)


def test_poisson_smoothing_to_zero_radius_is_the_mean(sample):
    boundary = fields.field_grid(sample, FieldKind.LOG_ABS_P, r=1.0, M=64)
    np.testing.assert_array_equal(fields.poisson_smooth(boundary, 0.0).values, np.zeros(64))


def test_poisson_smoothing_rejects_bad_input(sample):
    with pytest.raises(DomainError):
        fields.poisson_smooth(fields.field_grid(sample, FieldKind.COUNTING, M=1 << 14), 0.9)
    with pytest.raises(DomainError):
        fields.poisson_smooth(fields.field_grid(sample, FieldKind.LOG_ABS_P, r=1.0, M=64, offset=0.5), 0.9)
    bare = FieldGrid(kind=FieldKind.PSI, r=1.0, values=np.zeros(256))
    with pytest.raises(DomainError):
        fields.poisson_smooth(bare, 0.5)


def test_counting_function_matches_psi_identity(sample):
    theta = np.random.default_rng(5).uniform(0.0, TWO_PI, 1000)
    assert fields.counting_identity_gap(sample, theta) < 1e-10
    via_psi = (fields.psi_at_zero(sample) - fields.psi_field(sample, 1.0, theta)) / np.pi
    np.testing.assert_allclose(fields.counting_function(sample, theta), via_psi, rtol=0.0, atol=1e-10)


def test_field_grid_rejects_bad_radius():
    with pytest.raises(DomainError):
        FieldGrid(kind=FieldKind.PSI, r=1.5, values=np.zeros(4))
