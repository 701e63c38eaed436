# File: tests/test_gmc.py

import math

import numpy as np
import pytest

from models.ensemble import TWO_PI, EnsembleSpec
from models.field import FieldKind
from models.gmc_measure import NormalizerMode
from controllers import replicate_tasks
from utils import fields, gmc
from utils.errors import DomainError, GmcRegimeError
from utils.sampler import sample_spectrum


@pytest.fixture
def samples():
    return [sample_spectrum(EnsembleSpec(beta=2.0, n=40, seed=s)) for s in range(6)]


def test_resolve_field_kind():
    assert gmc.resolve_field_kind('abs') is FieldKind.LOG_ABS_P
    assert gmc.resolve_field_kind('psi') is FieldKind.PSI
    assert gmc.resolve_field_kind(FieldKind.PSI) is FieldKind.PSI
    with pytest.raises(DomainError):
        gmc.resolve_field_kind('imag')


def test_default_radius():
    assert gmc.default_radius(1000) == pytest.approx(1.0 - math.log(1000) ** 2 / 1000)
    with pytest.raises(DomainError):
        gmc.default_radius(10, delta=3.0)


def test_zero_gamma_measure_is_uniform(samples):
    measure = gmc.build_measure(samples[0], 0.0, 0.9)
    np.testing.assert_array_equal(measure.weights, 1.0)
    assert measure.total_mass() == pytest.approx(1.0, abs=1e-14)
    assert measure.mass((0.0, math.pi)) == pytest.approx(0.5, abs=1e-12)


def test_full_arc_mass_is_total_mass(samples):
    measure = gmc.build_measure(samples[1], 0.8, 0.9)
    assert measure.mass((0.3, 0.3 + TWO_PI)) == measure.total_mass()
    halves = measure.mass((0.0, math.pi)) + measure.mass((math.pi, TWO_PI))
    assert halves == pytest.approx(measure.total_mass(), rel=1e-12)


def test_asymptotic_normalizer_value(samples):
    assert gmc.asymptotic_normalizer(1.0, 0.9, 2.0) == pytest.approx(0.19 ** -0.25)
    measure = gmc.build_measure(samples[0], 1.0, 0.9, normalizer_mode='asymptotic')
    assert measure.normalizer_value == pytest.approx(0.19 ** -0.25)
    assert measure.normalizer_mode is NormalizerMode.ASYMPTOTIC


def test_monte_carlo_normalizer_makes_mean_mass_one(samples):
    gamma, r = 1.0, 0.9
    normalizer = gmc.estimate_normalizer(samples, gamma, r)
    masses = [gmc.build_measure(s, gamma, r, normalizer_mode=NormalizerMode.MONTE_CARLO,
                                normalizer_value=normalizer).total_mass() for s in samples]
    assert float(np.mean(masses)) == pytest.approx(1.0, rel=1e-10)


def test_monte_carlo_mode_needs_value(samples):
    with pytest.raises(DomainError):
        gmc.build_measure(samples[0], 1.0, 0.9, normalizer_mode='monte_carlo')
    with pytest.raises(DomainError):
        gmc.build_measure(samples[0], 1.0, 1.0)
    with pytest.raises(DomainError):
        gmc.estimate_normalizer([], 1.0, 0.9)


def test_second_moment_at_zero_gamma():
    arcs = ((0.0, 1.0), (2.0, 2.5))
    assert gmc.mass_second_moment(0.0, 0.9, 2.0, arcs) == pytest.approx(0.5 / TWO_PI ** 2)


def test_second_moment_reduces_to_product_at_small_radius():
    arcs = ((0.0, 1.0), (0.5, 3.0))
    assert gmc.mass_second_moment(1.0, 1e-4, 2.0, arcs) == pytest.approx(2.5 / TWO_PI ** 2, rel=1e-6)


def test_second_moment_grows_with_radius():
    arcs = ((0.0, 1.0), (0.0, 1.0))
    values = [gmc.mass_second_moment(1.0, r, 2.0, arcs) for r in (0.5, 0.9, 0.99)]
    assert values[0] < values[1] < values[2]


def test_second_moment_withheld_outside_l2_regime():
    with pytest.raises(GmcRegimeError):
        gmc.mass_second_moment(2.0, 0.9, 2.0, ((0.0, 1.0), (1.0, 2.0)))
    with pytest.raises(DomainError):
        gmc.mass_second_moment(1.0, 0.9, 2.0, ((1.0, 0.0), (1.0, 2.0)))


def test_thick_points_shrink_with_gamma(samples):
    sample = samples[2]
    measures = [gmc.thick_point_measure(sample, g) for g in (0.2, 0.6, 1.0)]
    assert 0.0 <= measures[2] <= measures[1] <= measures[0] <= TWO_PI
    with pytest.raises(DomainError):
        gmc.thick_point_measure(sample, 0.0)


def test_log_thick_ratio_is_minus_infinity_without_thick_points(samples):
    assert gmc.log_thick_ratio(samples[0], 50.0) == -math.inf


def test_free_energy(samples):
    assert gmc.free_energy(samples, 0.0) == 0.0
    curve = gmc.free_energy_curve(samples, [0.5, 1.0, 2.0])
    assert curve[0] < curve[1] < curve[2]
    with pytest.raises(DomainError):
        gmc.free_energy(samples, -1.0)


def test_secant_slopes():
    gammas = [0.0, 1.0, 2.0, 3.0, 4.0]
    values = [g * g for g in gammas]
    assert gmc.secant_slopes(gammas, values, 2.0) == (2.0, 6.0)
    with pytest.raises(DomainError):
        gmc.secant_slopes([0.0, 1.0, 2.0], [0.0, 1.0, 4.0], 0.0)


def test_measure_reuses_a_matching_field(samples):
    field = fields.field_grid(samples[2], FieldKind.LOG_ABS_P, r=0.9, M=512)
    reused = gmc.build_measure(samples[2], 0.7, 0.9, normalizer_mode=NormalizerMode.ASYMPTOTIC, field=field)
    fresh = gmc.build_measure(samples[2], 0.7, 0.9, normalizer_mode=NormalizerMode.ASYMPTOTIC, M=512)
    np.testing.assert_allclose(reused.log_weights, fresh.log_weights, atol=1e-12)
    with pytest.raises(DomainError):
        gmc.build_measure(samples[2], 0.7, 0.8, normalizer_mode=NormalizerMode.ASYMPTOTIC, field=field)
    with pytest.raises(DomainError):
        gmc.build_measure(samples[2], 0.7, 0.9, field_kind='psi', normalizer_mode=NormalizerMode.ASYMPTOTIC,
                          field=field)


def test_chaos_tasks_go_through_the_measure(samples):
    params = {'gamma': 0.6, 'r': 0.9, 'arcs': [[0.0, 1.0]], 'gammas': [1.2], 'grid_size': 512}
    row = replicate_tasks.chaos_masses(samples[:1], params)[0]
    measure = gmc.build_measure(samples[0], 0.6, 0.9, normalizer_mode=NormalizerMode.MONTE_CARLO,
                                normalizer_value=1.0, M=512)
    assert row['log_mass'] == pytest.approx(math.log(measure.total_mass()), rel=1e-12)
    assert row['log_arc0'] == pytest.approx(math.log(measure.mass((0.0, 1.0))), rel=1e-12)
    energy = replicate_tasks.boundary_energy(samples[:2], {'gammas': [1.0], 'thick_gammas': [0.5]})
    np.testing.assert_allclose([r['F[g=1]'] for r in energy], gmc.free_energy_values(samples[:2], 1.0), rtol=1e-12)
    assert energy[0]['thick[g=0.5]'] == gmc.log_thick_ratio(samples[0], 0.5)
