import numpy as np
import pytest

from diffusion_sr.denoisers import AnalyticGaussianDenoiser, RandomDenoiser, ZeroDenoiser
from diffusion_sr.diffusion import SamplerConfig, reverse_from
from diffusion_sr.error_analysis import estimate_e0
from diffusion_sr.schedule import build_schedule


@pytest.fixture(scope="module")
def sched():
    return build_schedule("linear", 1000, 1e-4, 0.02)


class TestAnalyticGaussianDenoiser:
    def test_point_mass_prior_recovers_exact_noise(self, sched):
        # v0 = 0: eps_hat = (x_t - sqrt(abar) mu0) / sqrt(1 - abar), exact
        mu0 = 0.4
        den = AnalyticGaussianDenoiser(mu0, 0.0, sched)
        rng = np.random.default_rng(0)
        x0 = np.full((6, 6, 1), mu0)
        for t in (1, 300, 1000):
            eps = rng.standard_normal(x0.shape)
            abar = sched.alpha_bar(t)
            x_t = np.sqrt(abar) * x0 + np.sqrt(1 - abar) * eps
            np.testing.assert_allclose(den.predict_noise(x_t, t), eps, atol=1e-10)

    def test_unit_prior_scalar_algebra(self, sched):
        # mu0 = 0, v0 = 1: E[x0|x_t] = sqrt(abar) x_t
        den = AnalyticGaussianDenoiser(0.0, 1.0, sched)
        x_t = np.array([[[0.7]]])
        t = 400
        abar = sched.alpha_bar(t)
        m = den.posterior_mean_x0(x_t, t)
        np.testing.assert_allclose(m, np.sqrt(abar) * x_t, rtol=1e-12)
        expected_eps = (x_t - np.sqrt(abar) * m) / np.sqrt(1 - abar)
        np.testing.assert_allclose(den.predict_noise(x_t, t), expected_eps, rtol=1e-12)

    def test_beats_zero_predictor_on_matched_data(self, sched):
        # Monte Carlo comparison of expected squared prediction error
        mu0, v0 = 0.1, 0.6
        rng = np.random.default_rng(1)
        n = 10_000
        x0 = mu0 + np.sqrt(v0) * rng.standard_normal(n)
        den = AnalyticGaussianDenoiser(mu0, v0, sched)
        worse = ZeroDenoiser()
        for t in (100, 500, 900):
            eps = rng.standard_normal(n)
            abar = sched.alpha_bar(t)
            x_t = np.sqrt(abar) * x0 + np.sqrt(1 - abar) * eps
            err_analytic = np.mean((eps - den.predict_noise(x_t, t)) ** 2)
            err_zero = np.mean((eps - worse.predict_noise(x_t, t)) ** 2)
            assert err_analytic < err_zero

    def test_rejects_negative_variance(self, sched):
        with pytest.raises(ValueError):
            AnalyticGaussianDenoiser(0.0, -0.1, sched)

    def test_elementwise_prior_arrays(self, sched):
        mu0 = np.array([0.1, -0.2, 0.3])
        v0 = np.array([0.5, 0.1, 0.9])
        den = AnalyticGaussianDenoiser(mu0, v0, sched)
        x_t = np.random.default_rng(2).standard_normal((4, 4, 3))
        out = den.predict_noise(x_t, 200)
        assert out.shape == x_t.shape


class TestOracleOptimality:
    def test_minimal_empirical_e0_among_baselines(self, sched):
        mu0, v0 = 0.25, 0.4
        rng = np.random.default_rng(3)
        samples = [mu0 + np.sqrt(v0) * rng.standard_normal((8, 8, 1)) for _ in range(24)]
        estimates = {
            "analytic": estimate_e0(AnalyticGaussianDenoiser(mu0, v0, sched), samples,
                                    sched, np.random.default_rng(4), 150),
            "zero": estimate_e0(ZeroDenoiser(), samples, sched,
                                np.random.default_rng(4), 150),
            "random": estimate_e0(RandomDenoiser(seed=0), samples, sched,
                                  np.random.default_rng(4), 150),
        }
        assert estimates["analytic"] < estimates["zero"]
        assert estimates["analytic"] < estimates["random"]


class TestSamplerCorrectnessViaOracle:
    def test_ddim_full_reverse_statistics(self, sched):
        mu0, v0 = 0.3, 0.5
        den = AnalyticGaussianDenoiser(mu0, v0, sched)
        cfg = SamplerConfig(family="ddim", ddim_eta=0.0, clip_range=None)
        rng = np.random.default_rng(3)
        out = reverse_from(rng.standard_normal(10_000), 1000, den, cfg, sched, rng)
        assert abs(out.mean() - mu0) <= 0.05 * abs(mu0)
        assert abs(out.var() - v0) <= 0.05 * v0

    def test_ddpm_full_reverse_statistics(self, sched):
        mu0, v0 = 0.3, 0.5
        den = AnalyticGaussianDenoiser(mu0, v0, sched)
        cfg = SamplerConfig(family="ddpm", clip_range=None)
        rng = np.random.default_rng(3)
        out = reverse_from(rng.standard_normal(10_000), 1000, den, cfg, sched, rng)
        assert abs(out.mean() - mu0) <= 0.10 * abs(mu0)
        assert abs(out.var() - v0) <= 0.10 * v0

    def test_ddim_subsampled_still_close(self, sched):
        mu0, v0 = 0.2, 0.3
        den = AnalyticGaussianDenoiser(mu0, v0, sched)
        cfg = SamplerConfig(family="ddim", ddim_eta=0.0, ddim_substeps=100, clip_range=None)
        rng = np.random.default_rng(3)
        out = reverse_from(rng.standard_normal(10_000), 1000, den, cfg, sched, rng)
        assert abs(out.mean() - mu0) <= 0.10 * abs(mu0)
        assert abs(out.var() - v0) <= 0.10 * v0


def test_random_denoiser_is_deterministic_per_inputs():
    den = RandomDenoiser(seed=5)
    x = np.zeros((3, 3, 1))
    np.testing.assert_array_equal(den.predict_noise(x, 7), den.predict_noise(x, 7))
    assert not np.array_equal(den.predict_noise(x, 7), den.predict_noise(x, 8))
