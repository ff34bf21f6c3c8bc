import numpy as np
import pytest

from diffusion_sr.denoisers import AnalyticGaussianDenoiser
from diffusion_sr.diffusion import (
    SamplerConfig,
    forward_marginal_sample,
    forward_step_sample,
    posterior_mean,
    predict_x0,
    reverse_from,
    reverse_step,
    reverse_steps_sequence,
)
from diffusion_sr.errors import DenoiserError
from diffusion_sr.schedule import build_schedule


@pytest.fixture(scope="module")
def sched():
    return build_schedule("linear", 1000, 1e-4, 0.02)


@pytest.fixture(scope="module")
def small_sched():
    return build_schedule("linear", 10, 1e-4, 0.02)


class PerfectDenoiser:
    """Test double that returns the exact eps used to build x_t."""

    def __init__(self, eps):
        self.eps = eps

    def predict_noise(self, x_t, t):
        return self.eps


class TestForwardStep:
    def test_vanishing_noise_limit(self, sched):
        tiny = build_schedule("linear", 5, 1e-20, 1e-20 * 1.0000001)
        rng = np.random.default_rng(0)
        x = np.linspace(-1, 1, 12).reshape(2, 2, 3)
        out = forward_step_sample(x, 1, tiny, rng)
        np.testing.assert_allclose(out, x, atol=1e-9)

    def test_direct_formula_arithmetic(self):
        # beta = 0.25, eps = 0.5: 0.866025 * 1 + 0.5 * 0.5
        sched = build_schedule("linear", 1, 0.25, 0.25)
        class FixedRng:
            def standard_normal(self, shape):
                return np.full(shape, 0.5)
        out = forward_step_sample(np.array([[[1.0]]]), 1, sched, FixedRng())
        assert out[0, 0, 0] == pytest.approx(np.sqrt(0.75) * 1.0 + 0.5 * 0.5, abs=1e-12)

    def test_composition_matches_marginal_moments(self, sched):
        # law of t sequential steps == Eq-2 marginal, by moment matching
        rng = np.random.default_rng(42)
        n = 100_000
        t = 100
        x = np.ones(n)
        for i in range(1, t + 1):
            x = forward_step_sample(x, i, sched, rng)
        abar = sched.alpha_bar(t)
        mean_se = np.sqrt((1 - abar)) / np.sqrt(n)
        var_se = (1 - abar) * np.sqrt(2.0 / (n - 1))
        assert abs(x.mean() - np.sqrt(abar)) < 3 * mean_se
        assert abs(x.var() - (1 - abar)) < 3 * var_se


class TestForwardMarginal:
    def test_t_zero_identity(self, sched):
        rng = np.random.default_rng(1)
        x0 = rng.uniform(-1, 1, (4, 4, 3))
        x_t, _ = forward_marginal_sample(x0, 0, sched, rng)
        np.testing.assert_array_equal(x_t, x0)

    def test_zero_eps_deterministic_branch(self, sched):
        x0 = np.full((3, 3, 1), 0.7)
        x_t, _ = forward_marginal_sample(x0, 400, sched, np.random.default_rng(0),
                                         eps=np.zeros_like(x0))
        np.testing.assert_allclose(x_t, np.sqrt(sched.alpha_bar(400)) * x0, rtol=1e-15)

    def test_hand_evaluated_closed_form(self):
        # abar = 0.64 at t=1 when beta = 0.36: x_t = 0.8*2 + 0.6*1 = 2.2
        sched = build_schedule("linear", 1, 0.36, 0.36)
        x0 = np.array([[[2.0]]])
        x_t, _ = forward_marginal_sample(x0, 1, sched, np.random.default_rng(0),
                                         eps=np.ones_like(x0))
        assert x_t[0, 0, 0] == pytest.approx(2.2, abs=1e-12)

    def test_range_error(self, sched):
        with pytest.raises(ValueError):
            forward_marginal_sample(np.zeros((2, 2, 1)), 1001, sched, np.random.default_rng(0))


class TestPredictX0:
    def test_exact_inversion(self, sched):
        rng = np.random.default_rng(3)
        x0 = rng.uniform(-1, 1, (8, 8, 3))
        for t in (1, 250, 999):
            x_t, eps = forward_marginal_sample(x0, t, sched, rng)
            rec = predict_x0(x_t, t, eps, sched)
            np.testing.assert_allclose(rec, x0, atol=1e-10)

    def test_zero_eps_hat(self, sched):
        x0 = np.full((2, 2, 1), 0.5)
        x_t = np.sqrt(sched.alpha_bar(300)) * x0
        np.testing.assert_allclose(predict_x0(x_t, 300, np.zeros_like(x0), sched), x0,
                                   rtol=1e-12)

    def test_scalar_inverse_example(self):
        sched = build_schedule("linear", 1, 0.36, 0.36)  # abar = 0.64
        x_t = np.array([[[2.2]]])
        out = predict_x0(x_t, 1, np.ones_like(x_t), sched)
        assert out[0, 0, 0] == pytest.approx(2.0, abs=1e-12)

    def test_clip_range(self, sched):
        x_t = np.array([[[5.0]]])
        out = predict_x0(x_t, 500, np.zeros_like(x_t), sched, clip_range=(-1, 1))
        assert out[0, 0, 0] == 1.0

    def test_ill_conditioned_warning(self):
        deep = build_schedule("linear", 2000, 1e-4, 0.05)
        assert deep.alpha_bar(2000) < 1e-12
        with pytest.warns(RuntimeWarning, match="ill-conditioned"):
            predict_x0(np.zeros((2, 2, 1)), 2000, np.zeros((2, 2, 1)), deep)


class TestPosteriorMean:
    def test_linearity_zero(self, sched):
        z = np.zeros((2, 2, 1))
        np.testing.assert_array_equal(posterior_mean(z, z, 500, sched), z)

    def test_coefficient_oracle(self, sched):
        # independently coded coefficient formula on constant images
        c = 0.37
        img = np.full((3, 3, 1), c)
        for t in (2, 100, 1000):
            abar, abar_prev = sched.alpha_bar(t), sched.alpha_bar(t - 1)
            beta, alpha = sched.beta(t), sched.alpha(t)
            expected = c * (np.sqrt(abar_prev) * beta + np.sqrt(alpha) * (1 - abar_prev)) / (1 - abar)
            got = posterior_mean(img, img, t, sched)
            np.testing.assert_allclose(got, expected, rtol=1e-13)

    def test_t1_returns_x0(self, sched):
        rng = np.random.default_rng(5)
        x0 = rng.uniform(-1, 1, (4, 4, 1))
        x_t = rng.uniform(-1, 1, (4, 4, 1))
        np.testing.assert_allclose(posterior_mean(x_t, x0, 1, sched), x0, atol=1e-12)


class TestReverseStep:
    def test_ddim_perfect_denoiser_collapses_to_inversion(self, sched):
        rng = np.random.default_rng(7)
        x0 = rng.uniform(-0.9, 0.9, (6, 6, 3))
        x_t, eps = forward_marginal_sample(x0, 300, sched, rng)
        cfg = SamplerConfig(family="ddim", ddim_eta=0.0, clip_range=None)
        out = reverse_step(x_t, 300, 0, PerfectDenoiser(eps), cfg, sched, rng)
        np.testing.assert_allclose(out, x0, atol=1e-10)

    def test_ddpm_vanishing_variance_hits_posterior_mean(self, sched):
        rng = np.random.default_rng(8)
        x0 = rng.uniform(-0.9, 0.9, (4, 4, 1))
        x_t, eps = forward_marginal_sample(x0, 1, sched, rng)
        cfg = SamplerConfig(family="ddpm", clip_range=None)
        out = reverse_step(x_t, 1, 0, PerfectDenoiser(eps), cfg, sched, rng)
        np.testing.assert_allclose(out, posterior_mean(x_t, x0, 1, sched), atol=1e-8)

    def test_ddpm_rejects_non_adjacent(self, sched):
        cfg = SamplerConfig(family="ddpm")
        with pytest.raises(ValueError, match="adjacent"):
            reverse_step(np.zeros((2, 2, 1)), 10, 5, PerfectDenoiser(np.zeros((2, 2, 1))),
                         cfg, sched, np.random.default_rng(0))

    def test_bad_denoiser_output_shape(self, sched):
        class BadShape:
            def predict_noise(self, x_t, t):
                return np.zeros((1, 1, 1))
        cfg = SamplerConfig()
        with pytest.raises(DenoiserError, match="shape"):
            reverse_step(np.zeros((2, 2, 1)), 10, 9, BadShape(), cfg, sched,
                         np.random.default_rng(0))


class TestReverseFrom:
    def test_t0_identity(self, sched):
        x = np.ones((2, 2, 1)) * 0.25
        cfg = SamplerConfig()
        out = reverse_from(x, 0, PerfectDenoiser(None), cfg, sched, np.random.default_rng(0))
        np.testing.assert_array_equal(out, x)

    def test_ddim_eta0_bit_identical_reruns(self, sched):
        den = AnalyticGaussianDenoiser(0.2, 0.3, sched)
        cfg = SamplerConfig(family="ddim", ddim_eta=0.0)
        x_t = np.random.default_rng(11).standard_normal((4, 4, 1))
        a = reverse_from(x_t, 200, den, cfg, sched, np.random.default_rng(0))
        b = reverse_from(x_t, 200, den, cfg, sched, np.random.default_rng(99))
        np.testing.assert_array_equal(a, b)

    def test_full_reverse_recovers_gaussian_stats(self, sched):
        # 1-D Gaussian data; DDIM from t=T reproduces mean/var within 5%
        mu0, v0 = 0.3, 0.5
        den = AnalyticGaussianDenoiser(mu0, v0, sched)
        cfg = SamplerConfig(family="ddim", ddim_eta=0.0, clip_range=None)
        rng = np.random.default_rng(123)
        x_T = rng.standard_normal(10_000)
        out = reverse_from(x_T, 1000, den, cfg, sched, rng)
        assert abs(out.mean() - mu0) < 0.05 * abs(mu0)
        assert abs(out.var() - v0) < 0.05 * v0

    def test_substep_sequence(self, sched):
        cfg = SamplerConfig(family="ddim", ddim_substeps=4)
        seq = reverse_steps_sequence(1000, cfg)
        assert seq[0] == 1000 and seq[-1] == 0
        assert len(seq) == 5
        assert all(a > b for a, b in zip(seq, seq[1:]))

    def test_substeps_exceeding_t_rejected(self, sched):
        cfg = SamplerConfig(family="ddim", ddim_substeps=50)
        with pytest.raises(ValueError, match="exceeds"):
            reverse_from(np.zeros(3), 10, PerfectDenoiser(np.zeros(3)), cfg, sched,
                         np.random.default_rng(0))

    def test_denoiser_failure_carries_step(self, sched):
        class Exploding:
            def predict_noise(self, x_t, t):
                raise RuntimeError("boom")
        cfg = SamplerConfig()
        with pytest.raises(DenoiserError, match=r"step 5"):
            reverse_from(np.zeros((2, 2, 1)), 5, Exploding(), cfg, sched,
                         np.random.default_rng(0))


def test_sampler_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(family="euler")
    with pytest.raises(ValueError):
        SamplerConfig(ddim_eta=-0.1)
    with pytest.raises(ValueError):
        SamplerConfig(ddim_substeps=0)
