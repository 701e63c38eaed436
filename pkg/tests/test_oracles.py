# File: tests/test_oracles.py

import math

import numpy as np
import pytest

from models.ensemble import EnsembleSpec, SpectrumSample
from models.oracle import MomentKind, MomentQuery
from utils import fields, oracles
from utils.errors import DomainError
from utils.sampler import sample_batch


def test_abs_charpoly_telescopes_at_beta_two():
    value = oracles.log_moment(MomentQuery(beta=2.0, n=8, gamma=2.0))
    assert value == pytest.approx(math.log(9.0), abs=1e-13)


@pytest.mark.parametrize("kind", list(MomentKind))
def test_zero_gamma_moment_is_zero(kind):
    assert oracles.log_moment(MomentQuery(beta=1.3, n=12, gamma=0.0, kind=kind)) == 0.0


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0, 7.0])
def test_exp_psi_single_angle_closed_form(beta):
    gamma = 1.0
    expected = math.log(math.sinh(math.pi * gamma / 2.0) / (math.pi * gamma / 2.0))
    value = oracles.log_moment(MomentQuery(beta=beta, n=1, gamma=gamma, kind=MomentKind.EXP_PSI))
    assert value == pytest.approx(expected, abs=1e-12)
    assert value == pytest.approx(0.37217, abs=1e-5)


@pytest.mark.parametrize("beta", [0.5, 1.0, 2.0, 4.0])
@pytest.mark.parametrize("n", [1, 2, 8, 64])
@pytest.mark.parametrize("gamma", [-1.5, 0.5, 1.0, 2.0, 4.0])
def test_exp_psi_routes_agree(beta, n, gamma):
    by_gamma = oracles._exp_psi_log_gamma(beta, n, gamma)
    by_product = oracles._exp_psi_double_product(beta, n, gamma)
    assert by_gamma == pytest.approx(by_product, abs=1e-10 * max(1.0, abs(by_gamma)))


def test_exp_psi_is_even_in_gamma():
    up = oracles.log_moment(MomentQuery(beta=2.0, n=10, gamma=1.5, kind=MomentKind.EXP_PSI))
    down = oracles.log_moment(MomentQuery(beta=2.0, n=10, gamma=-1.5, kind=MomentKind.EXP_PSI))
    assert up == pytest.approx(down, abs=1e-14)


def test_moment_domain_errors():
    with pytest.raises(DomainError):
        MomentQuery(beta=2.0, n=4, gamma=-1.0)
    with pytest.raises(DomainError):
        MomentQuery(beta=-1.0, n=4, gamma=1.0)
    with pytest.raises(DomainError):
        MomentQuery(beta=2.0, n=0, gamma=1.0)


def test_exp_moment_bound_dominates_oracle():
    for beta in (0.5, 2.0):
        for n in (2, 16):
            for gamma in (0.5, 1.0):
                exact = oracles.log_moment(MomentQuery(beta=beta, n=n, gamma=gamma, kind=MomentKind.EXP_PSI))
                assert exact <= oracles.exp_moment_bound(beta, n, gamma)


def test_clt_prediction_and_covariance():
    prediction = oracles.clt_prediction(0.5, 2.0)
    assert prediction.variance == 0.5 and prediction.log_laplace == 0.25
    zero = oracles.clt_prediction(0.0, 1.0)
    assert (zero.variance, zero.log_laplace) == (0.0, 0.0)
    assert oracles.gff_covariance(0.0, 0.3 + 0.2j) == 0.0
    assert oracles.gff_covariance(0.5, 0.5) == pytest.approx(0.5 * math.log(1.0 / 0.75))
    with pytest.raises(DomainError):
        oracles.gff_covariance(1.0, 0.0)


def test_free_energy_prediction_is_continuous_at_critical_gamma():
    beta = 2.0
    critical = oracles.critical_gamma(beta)
    assert critical == 2.0
    assert oracles.free_energy_prediction(beta, critical) == pytest.approx(1.0)
    assert oracles.free_energy_prediction(beta, critical + 1e-9) == pytest.approx(1.0, abs=1e-8)
    assert oracles.free_energy_prediction(beta, 4.0) == pytest.approx(3.0)


def test_rigidity_band_and_tail_bound():
    lo, hi = oracles.rigidity_band(2.0, 100, 0.5)
    scale = math.log(100) / 100
    assert (lo, hi) == (pytest.approx(1.5 * scale), pytest.approx(2.5 * scale))
    assert oracles.maxh_tail_bound(2.0, 100, 0.1) == 1.0
    assert oracles.maxh_tail_bound(2.0, 100, 6.0) < 1e-4
    with pytest.raises(DomainError):
        oracles.rigidity_band(2.0, 100, 1.0)


def test_oracle_table_columns():
    table = oracles.oracle_table([2.0], [8], [2.0])
    assert list(table.columns) == oracles.ORACLE_COLUMNS
    assert len(table) == 2
    row = table[table['kind'] == 'abs_charpoly'].iloc[0]
    assert row['log_moment'] == pytest.approx(math.log(9.0))


@pytest.mark.slow
@pytest.mark.parametrize("beta,n,gamma", [(2.0, 4, 1.0), (1.0, 3, 0.5)])
def test_abs_charpoly_monte_carlo(beta, n, gamma):
    angles, seeds = sample_batch(EnsembleSpec(beta=beta, n=n), 4000, master_seed=5)
    spec = EnsembleSpec(beta=beta, n=n)
    values = np.exp(gamma * np.array([fields.log_abs_p(SpectrumSample(angles=a.copy(), spec=spec), 1.0, 0.0)
                                      for a in angles]))
    target = math.exp(oracles.log_moment(MomentQuery(beta=beta, n=n, gamma=gamma)))
    assert abs(values.mean() - target) < 4.0 * values.std(ddof=1) / math.sqrt(values.size)


def test_exp_psi_single_angle_monte_carlo():
    angles, _ = sample_batch(EnsembleSpec(beta=2.0, n=1), 4000, master_seed=8)
    psi0 = 0.5 * (math.pi - angles[:, 0])
    values = np.exp(psi0)
    target = math.sinh(math.pi / 2.0) / (math.pi / 2.0)
    assert abs(values.mean() - target) < 3.0 * values.std(ddof=1) / math.sqrt(values.size) + 1e-3


@pytest.mark.parametrize("beta,n", [(0.5, 3), (2.0, 8), (4.0, 64)])
def test_log_moments_are_convex_in_gamma(beta, n):
    gammas = np.linspace(-0.8, 4.0, 49)
    for kind in MomentKind:
        values = np.array([oracles.log_moment(MomentQuery(beta=beta, n=n, gamma=g, kind=kind)) for g in gammas])
        assert np.all(np.diff(values, 2) >= -1e-10)
