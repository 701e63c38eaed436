# File: tests/test_loop_equation.py

import math

import numpy as np
import pytest

from models.ensemble import EnsembleSpec, SpectrumSample
from models.test_function import MesoScaledFn
from utils import function_library, harmonic
from utils import loop_equation as loop
from utils.sampler import sample_spectrum


def _fixed(angles, beta=2.0):
    angles = np.asarray(angles, dtype=float)
    return SpectrumSample(angles=angles, spec=EnsembleSpec(beta=beta, n=angles.size))


def test_antipodal_pair_gives_zero():
    sample = _fixed([0.0, math.pi])
    assert loop.w_functional(sample, function_library.cosine(), 0.0) == pytest.approx(0.0, abs=1e-12)


def test_zero_function_gives_zero():
    sample = sample_spectrum(EnsembleSpec(beta=1.5, n=12, seed=4))
    zero = function_library.constant(0.0)
    assert loop.w_functional(sample, zero, 0.7) == 0.0
    assert loop.w_tilde(sample, zero, 0.7).total == 0.0


def test_pair_kernel_diagonal_uses_derivative():
    x = np.array([0.4, 1.1])
    gx = np.sin(x)
    kernel = loop.pair_kernel(x, gx, np.cos(x), x, gx)
    np.testing.assert_allclose(np.diag(kernel), np.cos(x))
    assert kernel[0, 1] == pytest.approx((gx[0] - gx[1]) / (2.0 * math.tan((x[0] - x[1]) / 2.0)))


@pytest.mark.parametrize("k", [1, 2, 5])
def test_tilt_mean_is_minus_sigma_squared(k):
    w = function_library.cosine(k)
    assert loop.tilt_mean(loop.conjugate_pair(w)) == pytest.approx(-0.5 * k, abs=1e-12)
    assert loop.sigma_identity_gap(w) < 1e-10


def test_sigma_identity_for_kernel_function():
    assert loop.sigma_identity_gap(function_library.kernel_function('phi', 0.6)) < 1e-10


def test_effective_degree():
    assert loop.effective_degree(function_library.cosine(3)) == 3
    assert loop.effective_degree(function_library.constant(2.0)) == 0


@pytest.mark.parametrize("beta,n,t", [(2.0, 10, 0.0), (0.8, 7, 0.5), (5.0, 25, -1.2)])
def test_decomposition_reconstructs_w(beta, n, t):
    sample = sample_spectrum(EnsembleSpec(beta=beta, n=n, seed=31))
    w = function_library.kernel_function('phi', 0.5)
    assert loop.check_decomposition(sample, w, t) <= 1e-8


def test_loop_terms_split():
    sample = sample_spectrum(EnsembleSpec(beta=2.0, n=9, seed=2))
    terms = loop.w_tilde(sample, function_library.cosine(2), 0.0)
    assert terms.linear_term == 0.0
    assert terms.cross_term == 0.0
    assert terms.to_dict()['total'] == pytest.approx(terms.quad_term)


def test_r_functionals_of_zero_function():
    assert loop.r_functionals(function_library.constant(0.0)) == loop.RFunctionals(0.0, 0.0, 0.0)


def test_r_functionals_of_cosine():
    R = loop.r_functionals(function_library.cosine(2))
    # g = sin 2x, so the L1 norm of g'' is 16 and (g w')' = -4 sin 4x adds another 16
    assert R.R1 == pytest.approx(32.0, rel=1e-4)
    assert R.R2 == pytest.approx(2.0 + 2.0, rel=1e-6)
    assert R.R0 >= 0.0


@pytest.mark.parametrize("eps", [1.0, 0.5, 0.25])
def test_r0_stays_below_r6_bound(eps):
    w = function_library.cosine(2)
    assert loop.r0_functional(w) <= loop.r6_bound(w, eps)


def test_r8_bound_grows_and_dominates():
    base = function_library.bump3()
    bounds = [loop.r8_bound(base, L) for L in (4.0, 16.0, 64.0)]
    assert bounds[0] < bounds[1] < bounds[2]
    wrapped = harmonic.meso_wrap(MesoScaledFn(base, 4.0))
    assert loop.r0_functional(wrapped) <= bounds[0]


def test_error_budget_and_delta_hat():
    R = loop.RFunctionals(R0=1.0, R1=2.0, R2=0.0)
    log_n = math.log(100)
    assert loop.error_budget_rhs(R, 100) == pytest.approx((log_n + 2.0) * log_n / 100)
    assert loop.delta_hat(2.0, 10, [0.3, -0.5, 0.1]) == pytest.approx(0.05)
