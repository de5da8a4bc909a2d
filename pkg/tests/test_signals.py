import math

import numpy as np
import pytest
from scipy.integrate import quad
from hypothesis import given, settings, strategies as st

from naivenet.signals import (
    SignalModel,
    UnsupportedCombination,
    binary_action_kappa,
    llr_gaussian,
    llr_to_posterior,
    llr_triangular,
    observation_llr_imputed,
    posterior_to_llr,
    sample_signal,
    std_normal_cdf,
)


def phi_series(x, terms=200):
    """Independent oracle: Phi from the Taylor series of erf."""
    z = x / math.sqrt(2.0)
    total, term = 0.0, z
    for k in range(terms):
        total += term / (2 * k + 1)
        term *= -z * z / (k + 1)
    return 0.5 + total / math.sqrt(math.pi)


class TestNormalCdf:
    @pytest.mark.parametrize("x", [-3.0, -1.9149, -1.0, -0.5, 0.0, 0.3, 1.0, 2.2])
    def test_matches_series(self, x):
        assert std_normal_cdf(x) == pytest.approx(phi_series(x), abs=1e-13)

    def test_known_values(self):
        assert std_normal_cdf(-math.sqrt(5.0)) == pytest.approx(0.0126736, abs=1e-7)
        assert std_normal_cdf(-3.0) == pytest.approx(0.0013499, abs=1e-7)

    def test_array_in_array_out(self):
        out = std_normal_cdf(np.array([-1.0, 0.0, 1.0]))
        np.testing.assert_allclose(out, [0.158655254, 0.5, 0.841344746], atol=1e-9)

    @given(st.floats(-8, 8))
    def test_symmetry(self, x):
        assert std_normal_cdf(x) + std_normal_cdf(-x) == pytest.approx(1.0, abs=1e-14)


class TestLogOdds:
    @given(st.floats(-15, 15))
    def test_roundtrip(self, llr):
        assert posterior_to_llr(llr_to_posterior(llr)) == pytest.approx(llr, abs=1e-6)

    def test_examples(self):
        assert posterior_to_llr(0.6915) == pytest.approx(0.8065, abs=1e-3)
        assert llr_to_posterior(posterior_to_llr(0.3)) == pytest.approx(0.3, abs=1e-12)
        assert llr_gaussian(2.0, 2.0) == 1.0

    def test_even_odds(self):
        assert posterior_to_llr(0.5) == 0.0
        assert llr_to_posterior(0.0) == 0.5

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.1, 1.2])
    def test_boundary_posteriors_rejected(self, p):
        with pytest.raises(ValueError):
            posterior_to_llr(p)

    def test_extreme_llr_does_not_overflow(self):
        assert llr_to_posterior(1e4) == 1.0
        assert llr_to_posterior(-1e4) == 0.0

    def test_gaussian_llr(self):
        assert llr_gaussian(0.7, 2.0) == pytest.approx(0.35)
        assert llr_gaussian(1.0, 1.0, mu=0.5) == pytest.approx(1.0)

    def test_gaussian_llr_is_likelihood_ratio(self):
        s, mu, sigma = 0.37, 1.3, 1.7
        direct = ((s + mu) ** 2 - (s - mu) ** 2) / (2 * sigma**2)
        assert llr_gaussian(s, sigma, mu) == pytest.approx(direct)

    def test_triangular_llr(self):
        assert llr_triangular(0.5) == 0.0
        assert llr_triangular(0.75) == pytest.approx(math.log(3.0))

    @pytest.mark.parametrize("s", [0.0, 1.0, 1.5])
    def test_triangular_support(self, s):
        with pytest.raises(ValueError):
            llr_triangular(s)


class TestSignalModel:
    def test_validation(self):
        with pytest.raises(ValueError):
            SignalModel.gaussian(sigma=0.0)
        with pytest.raises(ValueError):
            SignalModel.binary(0.5)
        with pytest.raises(ValueError):
            SignalModel("laplace")

    def test_gaussian_moments(self):
        rng = np.random.default_rng(0)
        m = SignalModel.gaussian(1.0, 2.0)
        s = m.sample(1, rng, size=200_000)
        assert s.mean() == pytest.approx(1.0, abs=0.02)
        assert s.std() == pytest.approx(2.0, abs=0.02)
        s0 = m.sample(0, rng, size=200_000)
        assert s0.mean() == pytest.approx(-1.0, abs=0.02)

    def test_triangular_density(self):
        rng = np.random.default_rng(1)
        m = SignalModel.triangular()
        s = m.sample(1, rng, size=200_000)
        # density 2s on (0,1): mean 2/3, P[s < 1/2] = 1/4
        assert s.mean() == pytest.approx(2 / 3, abs=0.005)
        assert np.mean(s < 0.5) == pytest.approx(0.25, abs=0.005)
        assert np.all((s > 0) & (s <= 1))

    def test_binary_accuracy(self):
        rng = np.random.default_rng(2)
        s = SignalModel.binary(0.6).sample(1, rng, size=100_000)
        assert np.mean(s == 1) == pytest.approx(0.6, abs=0.005)

    def test_sample_signal_scalar(self):
        rng = np.random.default_rng(3)
        assert isinstance(sample_signal(SignalModel.gaussian(), 1, rng), float)
        with pytest.raises(ValueError):
            sample_signal(SignalModel.gaussian(), 2, rng)

    def test_llr_symmetric_under_state_flip(self):
        rng = np.random.default_rng(4)
        for m in (SignalModel.gaussian(1, 2), SignalModel.triangular(), SignalModel.binary(0.7)):
            a = m.sample_llr(1, np.random.default_rng(5), size=50_000)
            b = m.sample_llr(0, np.random.default_rng(6), size=50_000)
            assert a.mean() == pytest.approx(-b.mean(), abs=0.05)
        del rng

    def test_triangular_llr_finite_at_one(self):
        assert np.isfinite(SignalModel.triangular().llr(np.array([1.0])))[0]


class TestActionUpdates:
    def test_kappa_binary(self):
        assert binary_action_kappa(SignalModel.binary(0.6)) == pytest.approx(math.log(1.5))

    def test_kappa_gaussian(self):
        r = 0.5
        expected = math.log(phi_series(r) / phi_series(-r))
        assert binary_action_kappa(SignalModel.gaussian(1, 2)) == pytest.approx(expected, rel=1e-12)

    def test_kappa_examples(self):
        assert binary_action_kappa(SignalModel.gaussian(1, 2)) == pytest.approx(0.8065, abs=1e-3)
        assert 0 < binary_action_kappa(SignalModel.binary(0.5001)) < 1e-3

    def test_imputed_update_exceeds_kappa(self):
        kappa = binary_action_kappa(SignalModel.gaussian(1, 2))
        assert observation_llr_imputed(1, 2) > kappa
        assert observation_llr_imputed(1, 2, form="printed") > kappa

    def test_kappa_triangular_unsupported(self):
        with pytest.raises(UnsupportedCombination):
            binary_action_kappa(SignalModel.triangular())

    def test_imputed_update_is_conditional_mean(self):
        # oracle: (2/sigma^2) E[s | s > 0] for s ~ N(mu, sigma^2), by quadrature
        mu, sigma = 1.0, 2.0
        dens = lambda x: math.exp(-((x - mu) ** 2) / (2 * sigma**2))
        cond_mean = quad(lambda x: x * dens(x), 0, math.inf)[0] / quad(dens, 0, math.inf)[0]
        assert observation_llr_imputed(mu, sigma) == pytest.approx(2 * mu * cond_mean / sigma**2, rel=1e-8)
        assert observation_llr_imputed(mu, sigma) == pytest.approx(1.00916, abs=1e-5)

    def test_printed_form_differs(self):
        assert observation_llr_imputed(1.0, 2.0, form="printed") == pytest.approx(1.2323, abs=1e-4)
        assert observation_llr_imputed(1.0, 2.0, form="printed") > observation_llr_imputed(1.0, 2.0)

    def test_scale_invariance(self):
        # (mu, sigma) -> (k mu, k sigma) leaves the information in a signal unchanged
        assert observation_llr_imputed(2.0, 4.0) == pytest.approx(observation_llr_imputed(1.0, 2.0))

    @settings(max_examples=50)
    @given(st.floats(0.05, 3.0), st.floats(0.2, 5.0))
    def test_imputed_exceeds_mean_llr(self, mu, sigma):
        assert observation_llr_imputed(mu, sigma) >= 2 * mu**2 / sigma**2 * (1 - 1e-12)
