"""Forward noising and reverse DDPM/DDIM stepping.

All operators are elementwise over arbitrarily shaped float arrays, so a
single (H, W, C) image, a scalar, or a stacked batch all work unchanged.
Randomness always comes from an explicitly passed ``numpy.random.Generator``
(PCG64 via ``numpy.random.default_rng(seed)`` is the documented algorithm),
which makes every stochastic path replayable.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Protocol, runtime_checkable

import numpy as np

from .errors import DenoiserError
from .schedule import NoiseSchedule, VARIANCE_FLOOR

ILL_CONDITIONED_ALPHA_BAR = 1e-12


@runtime_checkable
class DenoiserContract(Protocol):
    """A noise predictor eps(x_t, t) -> array of the same shape.

    Implementations must be deterministic for fixed (x_t, t) and may
    declare a ``native_resolution`` attribute (H, W, C) or None.
    """

    def predict_noise(self, x_t: np.ndarray, t: int) -> np.ndarray: ...


@dataclass(frozen=True)
class SamplerConfig:
    """Reverse-process settings.

    ``family`` is ``"ddpm"`` (stochastic ancestral) or ``"ddim"``;
    ``ddim_eta = 0`` makes DDIM fully deterministic. ``ddim_substeps``
    optionally subsamples the reverse trajectory with a uniform stride.
    ``clip_range`` bounds the predicted clean image during sampling
    (None disables clipping, as unit tests of the raw algebra require).
    """

    family: str = "ddim"
    ddim_eta: float = 0.0
    ddim_substeps: int | None = None
    rng_seed: int | None = None
    clip_range: tuple[float, float] | None = (-1.0, 1.0)

    def __post_init__(self):
        if self.family not in ("ddpm", "ddim"):
            raise ValueError(f"sampler family must be 'ddpm' or 'ddim', got {self.family!r}")
        if self.ddim_eta < 0:
            raise ValueError(f"ddim_eta must be >= 0, got {self.ddim_eta}")
        if self.ddim_substeps is not None and self.ddim_substeps < 1:
            raise ValueError(f"ddim_substeps must be >= 1, got {self.ddim_substeps}")


def _check_step(t: int, schedule: NoiseSchedule, lo: int = 1) -> int:
    t = int(t)
    if not lo <= t <= schedule.num_steps:
        raise ValueError(f"step index t={t} outside [{lo}, {schedule.num_steps}]")
    return t


def _check_finite(x: np.ndarray, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains NaN or Inf")
    return x


def forward_step_sample(x_prev: np.ndarray, t: int, schedule: NoiseSchedule,
                        rng: np.random.Generator) -> np.ndarray:
    """One forward step: sqrt(1 - beta_t) * x_prev + sqrt(beta_t) * eps."""
    x_prev = _check_finite(x_prev, "x_prev")
    t = _check_step(t, schedule)
    beta = schedule.beta(t)
    eps = rng.standard_normal(x_prev.shape)
    return np.sqrt(1.0 - beta) * x_prev + np.sqrt(beta) * eps


def forward_marginal_sample(x0: np.ndarray, t: int, schedule: NoiseSchedule,
                            rng: np.random.Generator,
                            eps: np.ndarray | None = None):
    """Jump straight to step t: x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps.

    Returns ``(x_t, eps)`` so tests can re-inject the drawn noise. ``eps``
    may be supplied explicitly for deterministic checks. t = 0 returns the
    input unchanged (abar_0 = 1).
    """
    x0 = _check_finite(x0, "x0")
    t = _check_step(t, schedule, lo=0)
    if eps is None:
        eps = rng.standard_normal(x0.shape)
    else:
        eps = _check_finite(eps, "eps")
        if eps.shape != x0.shape:
            raise ValueError(f"eps shape {eps.shape} != x0 shape {x0.shape}")
    if t == 0:
        return x0.copy(), eps
    abar = schedule.alpha_bar(t)
    return np.sqrt(abar) * x0 + np.sqrt(1.0 - abar) * eps, eps


def predict_x0(x_t: np.ndarray, t: int, eps_hat: np.ndarray, schedule: NoiseSchedule,
               clip_range: tuple[float, float] | None = None) -> np.ndarray:
    """Invert the marginal: x0 = (x_t - sqrt(1 - abar_t) eps_hat) / sqrt(abar_t)."""
    x_t = _check_finite(x_t, "x_t")
    eps_hat = _check_finite(eps_hat, "eps_hat")
    if eps_hat.shape != x_t.shape:
        raise ValueError(f"eps_hat shape {eps_hat.shape} != x_t shape {x_t.shape}")
    t = _check_step(t, schedule)
    abar = schedule.alpha_bar(t)
    if abar < ILL_CONDITIONED_ALPHA_BAR and clip_range is None:
        warnings.warn(f"alpha_bar[{t}] = {abar:.3e} is ill-conditioned for unclamped "
                      "x0 prediction", RuntimeWarning, stacklevel=2)
    x0 = (x_t - np.sqrt(1.0 - abar) * eps_hat) / np.sqrt(abar)
    if clip_range is not None:
        x0 = np.clip(x0, clip_range[0], clip_range[1])
    return x0


def posterior_mean(x_t: np.ndarray, x0: np.ndarray, t: int,
                   schedule: NoiseSchedule) -> np.ndarray:
    """Mean of the reverse posterior q(x_{t-1} | x_t, x0)."""
    x_t = _check_finite(x_t, "x_t")
    x0 = _check_finite(x0, "x0")
    t = _check_step(t, schedule)
    abar = schedule.alpha_bar(t)
    abar_prev = schedule.alpha_bar(t - 1)
    beta = schedule.beta(t)
    alpha = schedule.alpha(t)
    coef0 = np.sqrt(abar_prev) * beta / (1.0 - abar)
    coef_t = np.sqrt(alpha) * (1.0 - abar_prev) / (1.0 - abar)
    return coef0 * x0 + coef_t * x_t


def _predict(denoiser: DenoiserContract, x_t: np.ndarray, t: int) -> np.ndarray:
    try:
        eps_hat = denoiser.predict_noise(x_t, t)
    except DenoiserError:
        raise
    except Exception as exc:
        raise DenoiserError(f"noise predictor failed: {exc}", step=t) from exc
    eps_hat = np.asarray(eps_hat, dtype=np.float64)
    if eps_hat.shape != x_t.shape:
        raise DenoiserError(
            f"predictor output shape {eps_hat.shape} != input shape {x_t.shape}", step=t)
    if not np.all(np.isfinite(eps_hat)):
        raise DenoiserError("predictor output contains NaN or Inf", step=t)
    return eps_hat


def ddim_sigma(t: int, t_prev: int, eta: float, schedule: NoiseSchedule) -> float:
    """DDIM noise scale for the (t -> t_prev) transition; eta = 1 recovers
    the ancestral beta_tilde for adjacent steps."""
    abar = schedule.alpha_bar(t)
    abar_prev = schedule.alpha_bar(t_prev)
    return eta * np.sqrt((1.0 - abar_prev) / (1.0 - abar)) * np.sqrt(1.0 - abar / abar_prev)


def reverse_step(x_t: np.ndarray, t: int, t_prev: int, denoiser: DenoiserContract,
                 config: SamplerConfig, schedule: NoiseSchedule,
                 rng: np.random.Generator) -> np.ndarray:
    """One reverse transition x_t -> x_{t_prev}.

    DDPM samples the posterior (t_prev must be t - 1); DDIM follows the
    deterministic update plus an optional eta-scaled noise term.
    """
    x_t = _check_finite(x_t, "x_t")
    t = _check_step(t, schedule)
    t_prev = int(t_prev)
    if not 0 <= t_prev < t:
        raise ValueError(f"t_prev={t_prev} must satisfy 0 <= t_prev < t={t}")

    eps_hat = _predict(denoiser, x_t, t)
    x0_hat = predict_x0(x_t, t, eps_hat, schedule, clip_range=config.clip_range)

    if config.family == "ddpm":
        if t_prev != t - 1:
            raise ValueError(f"DDPM requires adjacent steps, got t={t}, t_prev={t_prev}")
        mean = posterior_mean(x_t, x0_hat, t, schedule)
        var = schedule.beta_tilde(t, floor=VARIANCE_FLOOR)
        return mean + np.sqrt(var) * rng.standard_normal(x_t.shape)

    abar_prev = schedule.alpha_bar(t_prev)
    sigma = ddim_sigma(t, t_prev, config.ddim_eta, schedule)
    dir_coef = np.sqrt(max(1.0 - abar_prev - sigma ** 2, 0.0))
    x_prev = np.sqrt(abar_prev) * x0_hat + dir_coef * eps_hat
    if sigma > 0:
        x_prev = x_prev + sigma * rng.standard_normal(x_t.shape)
    return x_prev


def reverse_steps_sequence(t: int, config: SamplerConfig) -> list[int]:
    """Descending step sequence from t down to 0 (inclusive endpoints)."""
    if config.family == "ddim" and config.ddim_substeps is not None:
        n = config.ddim_substeps
        if n > t:
            raise ValueError(f"ddim_substeps={n} exceeds start step t={t}")
        seq = np.unique(np.round(np.linspace(0, t, n + 1)).astype(int))
        return list(seq[::-1])
    return list(range(t, -1, -1))


def reverse_from(x_t: np.ndarray, t: int, denoiser: DenoiserContract,
                 config: SamplerConfig, schedule: NoiseSchedule,
                 rng: np.random.Generator) -> np.ndarray:
    """Run the reverse chain from step t down to the clean image.

    t = 0 returns the input unchanged. Denoiser failures propagate as
    :class:`DenoiserError` with the failing step attached.
    """
    x = _check_finite(x_t, "x_t")
    t = _check_step(t, schedule, lo=0)
    if t == 0:
        return x.copy()
    seq = reverse_steps_sequence(t, config)
    for cur, prev in zip(seq[:-1], seq[1:]):
        x = reverse_step(x, cur, prev, denoiser, config, schedule, rng)
    return x
