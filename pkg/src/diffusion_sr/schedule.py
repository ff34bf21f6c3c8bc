"""Variance schedules for the forward diffusion process.

A schedule is the sequence ``beta[1..T]`` of per-step Gaussian noise
variances, together with the derived quantities used everywhere else:

``alpha[t] = 1 - beta[t]``
    per-step signal retention,
``alpha_bar[t] = prod_{i<=t} alpha[i]``
    cumulative signal retention, with ``alpha_bar[0] = 1`` for the clean
    image,
``beta_tilde[t] = (1 - alpha_bar[t-1]) / (1 - alpha_bar[t]) * beta[t]``
    the posterior variance of the reverse transition.

Five constructions are supported:

``linear``
    arithmetic progression from ``beta_start`` to ``beta_end``,
``scaled_linear``
    linear in sqrt-space, i.e. ``linspace(sqrt(b0), sqrt(b1))**2``,
``cosine``
    betas derived from ``alpha_bar(t) = f(t)/f(0)`` with
    ``f(t) = cos(((t/T + s)/(1 + s)) * pi/2)**2`` and offset ``s = 0.008``,
``squared_cosine``
    the same ``alpha_bar`` construction with each beta capped at 0.999
    (the cap commonly used by latent diffusion codebases),
``sigmoid``
    a logistic ramp over ``[-6, 6]`` rescaled to ``[beta_start, beta_end]``.

All arrays are float64 and frozen after construction, so a schedule can be
shared freely between threads and workers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

SCHEDULE_KINDS = ("linear", "scaled_linear", "cosine", "squared_cosine", "sigmoid")

# Sampling floor for the degenerate beta_tilde[1] = 0 posterior variance.
VARIANCE_FLOOR = 1e-20


def parse_schedule_kind(name: str) -> str:
    kind = str(name).strip().lower()
    if kind not in SCHEDULE_KINDS:
        raise ConfigError("kind", f"unknown schedule kind {name!r}; expected one of {SCHEDULE_KINDS}")
    return kind


@dataclass(frozen=True)
class NoiseSchedule:
    """Precomputed variance schedule over ``T`` forward steps.

    Step indices are 1-based for ``beta``/``alpha``/``beta_tilde``;
    ``alpha_bar`` additionally supports t = 0 (empty product, value 1).
    """

    kind: str
    num_steps: int
    betas: np.ndarray          # betas[i] = beta_{i+1}, shape (T,)
    alphas: np.ndarray         # 1 - betas, shape (T,)
    alpha_bars: np.ndarray     # alpha_bars[t] = prod_{i<=t} alpha_i, shape (T+1,), [0] = 1
    beta_tildes: np.ndarray    # beta_tildes[i] = beta_tilde_{i+1}, shape (T,), [0] = 0
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for arr in (self.betas, self.alphas, self.alpha_bars, self.beta_tildes):
            arr.setflags(write=False)

    @property
    def T(self) -> int:
        return self.num_steps

    def _check_step(self, t: int, lo: int) -> int:
        t = int(t)
        if not lo <= t <= self.num_steps:
            raise ValueError(f"step index t={t} outside [{lo}, {self.num_steps}]")
        return t

    def beta(self, t: int) -> float:
        return float(self.betas[self._check_step(t, 1) - 1])

    def alpha(self, t: int) -> float:
        return float(self.alphas[self._check_step(t, 1) - 1])

    def alpha_bar(self, t: int) -> float:
        return float(self.alpha_bars[self._check_step(t, 0)])

    def beta_tilde(self, t: int, floor: float = 0.0) -> float:
        v = float(self.beta_tildes[self._check_step(t, 1) - 1])
        return max(v, floor)


def _cosine_alpha_bar(num_steps: int, s: float) -> np.ndarray:
    t = np.arange(num_steps + 1, dtype=np.float64)
    f = np.cos(((t / num_steps + s) / (1.0 + s)) * math.pi / 2.0) ** 2
    return f / f[0]


def build_schedule(kind: str, num_steps: int, beta_start: float = 1e-4,
                   beta_end: float = 0.02, extra: dict | None = None) -> NoiseSchedule:
    """Construct a :class:`NoiseSchedule`.

    ``extra`` overrides per-kind parameters: ``cosine_s`` (offset, default
    0.008), ``beta_cap`` (max beta for the cosine family; 0.9999 for
    ``cosine``, 0.999 for ``squared_cosine``), ``sigmoid_span`` (ramp
    half-width, default 6.0).

    Raises :class:`ConfigError` for out-of-range parameters, naming the
    offending field.
    """
    kind = parse_schedule_kind(kind)
    extra = dict(extra or {})
    num_steps = int(num_steps)
    if num_steps < 1:
        raise ConfigError("num_steps", f"must be >= 1, got {num_steps}")

    beta_parameterized = kind in ("linear", "scaled_linear", "sigmoid")
    if beta_parameterized:
        if not (0.0 < beta_start < 1.0):
            raise ConfigError("beta_start", f"must be in (0, 1), got {beta_start}")
        if not (0.0 < beta_end < 1.0):
            raise ConfigError("beta_end", f"must be in (0, 1), got {beta_end}")
        if beta_start > beta_end:
            raise ConfigError("beta_start", f"must be <= beta_end, got {beta_start} > {beta_end}")

    if kind == "linear":
        betas = np.linspace(beta_start, beta_end, num_steps, dtype=np.float64)
    elif kind == "scaled_linear":
        betas = np.linspace(math.sqrt(beta_start), math.sqrt(beta_end),
                            num_steps, dtype=np.float64) ** 2
    elif kind == "sigmoid":
        span = float(extra.pop("sigmoid_span", 6.0))
        ramp = np.linspace(-span, span, num_steps, dtype=np.float64)
        logistic = 1.0 / (1.0 + np.exp(-ramp))
        betas = beta_start + (beta_end - beta_start) * logistic
    else:  # cosine family
        s = float(extra.pop("cosine_s", 0.008))
        cap = float(extra.pop("beta_cap", 0.999 if kind == "squared_cosine" else 0.9999))
        if not (0.0 < cap < 1.0):
            raise ConfigError("beta_cap", f"must be in (0, 1), got {cap}")
        abar = _cosine_alpha_bar(num_steps, s)
        betas = np.minimum(1.0 - abar[1:] / abar[:-1], cap)

    if np.any(betas <= 0.0) or np.any(betas >= 1.0):
        raise ConfigError("beta", f"schedule {kind!r} produced betas outside (0, 1)")

    alphas = 1.0 - betas
    alpha_bars = np.concatenate([[1.0], np.cumprod(alphas)])
    # denominators can underflow to 0 for degenerate tiny-beta schedules
    denom = 1.0 - alpha_bars[1:]
    beta_tildes = np.where(denom > 0.0,
                           (1.0 - alpha_bars[:-1]) / np.maximum(denom, 1e-300) * betas,
                           0.0)

    return NoiseSchedule(kind=kind, num_steps=num_steps, betas=betas, alphas=alphas,
                         alpha_bars=alpha_bars, beta_tildes=beta_tildes,
                         params={"beta_start": beta_start, "beta_end": beta_end, **extra})


def noise_level(t: int, schedule: NoiseSchedule) -> float:
    """Fraction t/T of the forward chain applied before reversal."""
    t = int(t)
    if not 0 <= t <= schedule.num_steps:
        raise ValueError(f"step index t={t} outside [0, {schedule.num_steps}]")
    return t / schedule.num_steps


def step_for_noise_level(level: float, schedule: NoiseSchedule) -> int:
    """Inverse of :func:`noise_level`: nearest step for a fraction in [0, 1]."""
    level = float(level)
    if not 0.0 <= level <= 1.0:
        raise ValueError(f"noise level {level} outside [0, 1]")
    return int(round(level * schedule.num_steps))


def schedule_to_csv(schedule: NoiseSchedule, out) -> None:
    """Write ``t,beta,alpha,alpha_bar,beta_tilde`` rows at full double precision."""
    out.write("t,beta,alpha,alpha_bar,beta_tilde\n")
    for i in range(schedule.num_steps):
        out.write("%d,%.17g,%.17g,%.17g,%.17g\n" % (
            i + 1, schedule.betas[i], schedule.alphas[i],
            schedule.alpha_bars[i + 1], schedule.beta_tildes[i]))
