"""Concrete noise predictors.

``AnalyticGaussianDenoiser`` is exact when the clean data is elementwise
Gaussian: the posterior mean E[x0 | x_t] has a closed form, and the implied
noise estimate follows by inverting the forward marginal. It is the test
oracle that lets the samplers be verified without any trained network.

``ZeroDenoiser`` and ``RandomDenoiser`` are intentionally bad baselines for
loss comparisons. File-loaded networks live in ``container``; the external
process bridge lives in ``protocol``.
"""

from __future__ import annotations

import numpy as np

from .schedule import NoiseSchedule


class AnalyticGaussianDenoiser:
    """Exact noise predictor for data distributed N(mu0, diag(v0)).

    ``mu0`` and ``v0`` may be scalars or arrays broadcastable against the
    inputs; v0 must be elementwise nonnegative (v0 = 0 is the point-mass
    prior, for which the prediction is the exactly injected noise).
    """

    def __init__(self, mu0, v0, schedule: NoiseSchedule, native_resolution=None):
        self.mu0 = np.asarray(mu0, dtype=np.float64)
        self.v0 = np.asarray(v0, dtype=np.float64)
        if np.any(self.v0 < 0):
            raise ValueError("v0 must be elementwise >= 0")
        self.schedule = schedule
        self.native_resolution = native_resolution

    def posterior_mean_x0(self, x_t: np.ndarray, t: int) -> np.ndarray:
        """E[x0 | x_t] for the Gaussian prior."""
        abar = self.schedule.alpha_bar(t)
        num = np.sqrt(abar) * self.v0 * x_t + (1.0 - abar) * self.mu0
        den = abar * self.v0 + (1.0 - abar)
        return num / den

    def predict_noise(self, x_t: np.ndarray, t: int) -> np.ndarray:
        abar = self.schedule.alpha_bar(t)
        m = self.posterior_mean_x0(x_t, t)
        return (x_t - np.sqrt(abar) * m) / np.sqrt(1.0 - abar)


class ZeroDenoiser:
    """Predicts zero noise everywhere; a deliberately weak baseline."""

    def __init__(self, native_resolution=None):
        self.native_resolution = native_resolution

    def predict_noise(self, x_t: np.ndarray, t: int) -> np.ndarray:
        return np.zeros_like(np.asarray(x_t, dtype=np.float64))


class RandomDenoiser:
    """Predicts fresh standard-normal noise, deterministically per (x_t, t).

    The draw is seeded from (seed, t) so repeated calls with the same inputs
    agree, as the denoiser contract requires.
    """

    def __init__(self, seed: int = 0, native_resolution=None):
        self.seed = int(seed)
        self.native_resolution = native_resolution

    def predict_noise(self, x_t: np.ndarray, t: int) -> np.ndarray:
        rng = np.random.default_rng((self.seed, int(t)))
        return rng.standard_normal(np.asarray(x_t).shape)
