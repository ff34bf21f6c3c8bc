import numpy as np
import pytest

from diffusion_sr.error_analysis import ErrorModelConfig, LossCurve, loss_curve_from_stats
from diffusion_sr.images import to_model_range
from diffusion_sr.prf import (
    PrfConfig,
    PrfResult,
    compute_prf,
    constraint_margins,
    estimate_degradation_energy,
    select_injection_step,
)
from diffusion_sr.resample import DegradeSpec, degrade
from diffusion_sr.schedule import build_schedule
from diffusion_sr.toydata import make_toy_corpus


@pytest.fixture(scope="module")
def sched():
    return build_schedule("linear", 1000, 1e-4, 0.02)


def synthetic_curve(signature, weighted_fidelity, omega=0.004):
    """Assemble a LossCurve directly from arrays (for constraint-logic tests)."""
    signature = np.asarray(signature, dtype=np.float64)
    weighted = np.asarray(weighted_fidelity, dtype=np.float64)
    T = len(signature) - 1
    steps = np.arange(T + 1)
    return LossCurve(steps=steps, noise_levels=steps / T, signature=signature,
                     fidelity=weighted / omega, weighted_fidelity=weighted,
                     total=signature + weighted, k_t=np.zeros(T + 1),
                     a_t=np.zeros(T + 1), d2=0.0, s2=0.0, config=None)


def brute_force_prf(curve, c_s, c_f):
    """Exhaustive-scan oracle over every step."""
    feasible = [t for t in range(len(curve.steps))
                if curve.signature[t] <= c_s and curve.weighted_fidelity[t] <= c_f]
    if not feasible:
        return None, []
    best = min(feasible, key=lambda t: (curve.total[t], t))
    return best, feasible


class TestComputePrf:
    def test_thresholds_below_minima_give_empty_prf(self):
        curve = synthetic_curve(np.linspace(1, 2, 101), np.linspace(2, 1, 101))
        res = compute_prf(curve, PrfConfig(c_s=0.5, c_f=0.5))
        assert not res.feasible
        assert res.t_star is None
        assert res.feasible_set == []

    def test_oversized_thresholds_cover_full_range(self):
        sig = np.linspace(0, 1, 101)
        wfid = np.linspace(1, 0, 101)
        curve = synthetic_curve(sig, wfid)
        res = compute_prf(curve, PrfConfig(c_s=10.0, c_f=10.0))
        assert res.feasible_set == [(0, 100)]
        assert res.t_star == int(np.argmin(curve.total))

    def test_crossing_interval_example(self):
        # signature t/T crosses 0.6 at t = 0.6T; fidelity 1 - t/T crosses 0.8 at 0.2T
        T = 1000
        t = np.arange(T + 1)
        curve = synthetic_curve(t / T, 1 - t / T)
        res = compute_prf(curve, PrfConfig(c_s=0.6, c_f=0.8))
        assert res.feasible_set == [(200, 600)]
        star, feas = brute_force_prf(curve, 0.6, 0.8)
        assert res.t_star == star
        assert list(range(200, 601)) == feas

    def test_exhaustive_scan_equivalence_on_random_curves(self):
        rng = np.random.default_rng(12)
        for _ in range(100):
            T = int(rng.integers(5, 60))
            sig = np.cumsum(rng.uniform(0, 1, T + 1))
            wfid = np.cumsum(rng.uniform(0, 1, T + 1))[::-1].copy()
            curve = synthetic_curve(sig, wfid)
            c_s = float(rng.uniform(0, sig[-1] * 1.2))
            c_f = float(rng.uniform(0, wfid[0] * 1.2))
            res = compute_prf(curve, PrfConfig(c_s=max(c_s, 1e-9), c_f=max(c_f, 1e-9)))
            star, feas = brute_force_prf(curve, max(c_s, 1e-9), max(c_f, 1e-9))
            assert res.t_star == star
            got = [t for iv in res.feasible_set for t in range(iv[0], iv[1] + 1)]
            assert got == feas

    def test_tie_breaks_toward_smaller_t(self):
        curve = synthetic_curve(np.zeros(11), np.zeros(11))  # total identically 0
        res = compute_prf(curve, PrfConfig(c_s=1.0, c_f=1.0))
        assert res.t_star == 0

    def test_enlarging_thresholds_never_shrinks_feasible_set(self):
        rng = np.random.default_rng(7)
        sig = np.cumsum(rng.uniform(0, 1, 51))
        wfid = np.cumsum(rng.uniform(0, 1, 51))[::-1].copy()
        curve = synthetic_curve(sig, wfid)
        small = compute_prf(curve, PrfConfig(c_s=10.0, c_f=10.0))
        big = compute_prf(curve, PrfConfig(c_s=15.0, c_f=14.0))
        small_set = {t for iv in small.feasible_set for t in range(iv[0], iv[1] + 1)}
        big_set = {t for iv in big.feasible_set for t in range(iv[0], iv[1] + 1)}
        assert small_set <= big_set

    def test_argmin_invariant_under_joint_scaling(self):
        rng = np.random.default_rng(8)
        sig = np.cumsum(rng.uniform(0, 1, 101))
        wfid = np.cumsum(rng.uniform(0, 1, 101))[::-1].copy()
        curve = synthetic_curve(sig, wfid)
        res1 = compute_prf(curve, PrfConfig(c_s=30.0, c_f=30.0))
        scaled = synthetic_curve(7.0 * sig, 7.0 * wfid)
        res2 = compute_prf(scaled, PrfConfig(c_s=210.0, c_f=210.0))
        assert res1.t_star == res2.t_star
        assert res1.feasible_set == res2.feasible_set

    def test_determinism(self):
        curve = synthetic_curve(np.linspace(0, 1, 101), np.linspace(1, 0, 101))
        cfg = PrfConfig(c_s=0.9, c_f=0.9)
        a, b = compute_prf(curve, cfg), compute_prf(curve, cfg)
        assert a.t_star == b.t_star and a.feasible_set == b.feasible_set

    def test_margins_shape(self, sched):
        curve = loss_curve_from_stats(0.01, 0.5, ErrorModelConfig(), sched)
        m = constraint_margins(curve, PrfConfig())
        assert m.shape == (1001, 2)

    def test_relative_mode_anchors(self, sched):
        curve = loss_curve_from_stats(0.01, 0.5, ErrorModelConfig(), sched)
        res = compute_prf(curve, PrfConfig(c_s=0.7, c_f=0.3, threshold_mode="relative"))
        assert res.diagnostics["c_s_effective"] == pytest.approx(0.7 * curve.signature[-1])
        assert res.diagnostics["c_f_effective"] == pytest.approx(
            0.3 * curve.weighted_fidelity[1])
        assert res.feasible


class TestSelectInjectionStep:
    def test_zero_difference_selects_t0(self, sched):
        x = np.random.default_rng(0).uniform(-1, 1, (32, 32, 3))
        res = select_injection_step(x, x.copy(), ErrorModelConfig(), PrfConfig(), sched)
        assert res.feasible
        assert res.t_star == 0  # standard form has no A term; nothing to recover

    def test_stronger_degradation_never_decreases_t_star(self, sched):
        img = make_toy_corpus(1, 128, seed=3)[0]
        x0 = to_model_range(img)
        cfg = ErrorModelConfig()
        prf_cfg = PrfConfig()
        stars = []
        for scale in (2.0, 2.7, 3.5, 4.0):
            xh = to_model_range(degrade(img, DegradeSpec(scale=scale)))
            res = select_injection_step(x0, xh, cfg, prf_cfg, sched)
            assert res.feasible
            stars.append(res.t_star)
        assert all(a <= b for a, b in zip(stars, stars[1:]))
        assert stars[-1] > stars[0]

    def test_three_scale_battery_strictly_increasing(self, sched):
        # one 256^2 test image across 2x / 2.7x / 4x
        img = make_toy_corpus(1, 256, seed=5)[0]
        x0 = to_model_range(img)
        stars = []
        for scale in (2.0, 2.7, 4.0):
            xh = to_model_range(degrade(img, DegradeSpec(scale=scale)))
            res = select_injection_step(x0, xh, ErrorModelConfig(), PrfConfig(), sched)
            stars.append(res.t_star)
        assert stars[0] < stars[1] < stars[2]

    def test_extreme_degradation_infeasible(self, sched):
        img = make_toy_corpus(1, 128, seed=0)[0]
        x0 = to_model_range(img)
        xh = to_model_range(degrade(img, DegradeSpec(scale=8.0)))
        res = select_injection_step(x0, xh, ErrorModelConfig(), PrfConfig(), sched)
        assert not res.feasible
        assert res.t_star is None

    def test_proxy_mode_requires_scale(self, sched):
        img = to_model_range(make_toy_corpus(1, 64, seed=1)[0])
        with pytest.raises(ValueError, match="scale"):
            select_injection_step(None, img, ErrorModelConfig(), PrfConfig(), sched)

    def test_proxy_mode_runs_and_orders_on_corpus_mean(self, sched):
        corpus = make_toy_corpus(8, 128, seed=0)
        cfg, prf_cfg = ErrorModelConfig(), PrfConfig()
        means = []
        for scale in (2.0, 4.0):
            stars = []
            for img in corpus:
                xh = to_model_range(degrade(img, DegradeSpec(scale=scale)))
                res = select_injection_step(None, xh, cfg, prf_cfg, sched, scale=scale)
                assert res.feasible
                stars.append(res.t_star)
            means.append(np.mean(stars))
        assert means[0] < means[1]


class TestDegradationEnergyProxy:
    def test_correlates_with_oracle_on_corpus(self):
        corpus = make_toy_corpus(8, 128, seed=0)
        oracle, proxy = [], []
        for scale in (2.0, 2.7, 3.5, 4.0, 8.0):
            for img in corpus:
                x0 = to_model_range(img)
                xh = to_model_range(degrade(img, DegradeSpec(scale=scale)))
                oracle.append(np.mean((x0 - xh) ** 2))
                proxy.append(estimate_degradation_energy(xh, scale))
        r = np.corrcoef(oracle, proxy)[0, 1]
        assert r > 0.7

    def test_mean_monotone_across_scales(self):
        corpus = make_toy_corpus(8, 128, seed=0)
        means = []
        for scale in (2.0, 2.7, 3.5, 4.0, 8.0):
            vals = [estimate_degradation_energy(
                to_model_range(degrade(img, DegradeSpec(scale=scale))), scale)
                for img in corpus]
            means.append(np.mean(vals))
        assert all(a < b for a, b in zip(means, means[1:]))

    def test_rejects_bad_scale(self):
        with pytest.raises(ValueError):
            estimate_degradation_energy(np.zeros((16, 16, 1)), 0.5)


def test_config_validation():
    with pytest.raises(ValueError):
        PrfConfig(c_s=0.0)
    with pytest.raises(ValueError):
        PrfConfig(threshold_mode="adaptive")


def test_result_serialization(sched):
    curve = loss_curve_from_stats(0.01, 0.5, ErrorModelConfig(), sched)
    res = compute_prf(curve, PrfConfig())
    d = res.as_dict()
    assert isinstance(d["feasible"], bool)
    assert d["t_star"] == res.t_star
    assert isinstance(d["feasible_intervals"], list)
