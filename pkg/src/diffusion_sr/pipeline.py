"""End-to-end super-resolution: degrade, inject noise, reverse-diffuse.

Evaluation mode starts from a ground-truth image and degrades it itself,
so distortion metrics can be reported. Deployment mode starts from an
already-degraded input at native resolution and never touches a
ground-truth file; the injection step then comes either from an explicit
setting or from the constrained search with the estimated degradation
energy.

The whole run is deterministic for a fixed seed: repeat runs write
bit-identical images.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .diffusion import SamplerConfig, forward_marginal_sample, reverse_from
from .error_analysis import ErrorModelConfig
from .images import load_png, save_png, to_file_range, to_model_range, validate_image
from .metrics import FreqSplitSpec, freq_split_error, psnr, ssim
from .prf import PrfConfig, select_injection_step
from .resample import DegradeSpec, degrade
from .schedule import NoiseSchedule, noise_level, step_for_noise_level

MODES = ("evaluation", "deployment")


@dataclass(frozen=True)
class SrRequest:
    """One super-resolution job.

    Exactly one injection selector must be set: ``t``, ``noise_level``,
    or ``auto``. ``degrade_spec`` is required in evaluation mode; in
    deployment mode ``scale`` describes how the input was degraded (used
    by the auto selector's energy estimate and the report).
    """

    input_path: str
    output_path: str | None = None
    mode: str = "evaluation"
    degrade_spec: DegradeSpec | None = None
    scale: float | None = None
    t: int | None = None
    noise_level: float | None = None
    auto: bool = False
    seed: int | None = None
    output_bit_depth: int = 8

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        selectors = sum([self.t is not None, self.noise_level is not None, bool(self.auto)])
        if selectors != 1:
            raise ValueError("exactly one of t / noise_level / auto must be set")
        if self.mode == "evaluation" and self.degrade_spec is None:
            raise ValueError("evaluation mode needs a degrade_spec")


def super_resolve(lr_native: np.ndarray, t: int, denoiser, config: SamplerConfig,
                  schedule: NoiseSchedule, rng: np.random.Generator) -> np.ndarray:
    """Inject t forward steps of noise, then reverse the chain from t.

    ``lr_native`` is the degraded image already at the output resolution,
    in model range. t = 0 returns the input unchanged.
    """
    lr_native = validate_image(lr_native, "lr_native")
    native = getattr(denoiser, "native_resolution", None)
    if native is not None and tuple(lr_native.shape) != tuple(native):
        raise ValueError(
            f"input shape {lr_native.shape} does not match the denoiser's "
            f"native resolution {tuple(native)}")
    if t == 0:
        return lr_native.copy()
    x_t, _ = forward_marginal_sample(lr_native, t, schedule, rng)
    return reverse_from(x_t, t, denoiser, config, schedule, rng)


def run_request(req: SrRequest, denoiser, schedule: NoiseSchedule,
                sampler_config: SamplerConfig | None = None,
                error_config: ErrorModelConfig | None = None,
                prf_config: PrfConfig | None = None,
                freq_spec: FreqSplitSpec | None = None) -> dict:
    """Execute one request and return the JSON-ready report."""
    sampler_config = sampler_config or SamplerConfig()
    error_config = error_config or ErrorModelConfig()
    prf_config = prf_config or PrfConfig()
    freq_spec = freq_spec or FreqSplitSpec()
    t_start = time.perf_counter()

    source = load_png(req.input_path)
    if req.mode == "evaluation":
        hr_file = source
        lr_file = degrade(hr_file, req.degrade_spec)
        scale = req.degrade_spec.scale
    else:
        hr_file = None
        lr_file = source
        scale = req.scale

    lr_model = to_model_range(lr_file)
    hr_model = None if hr_file is None else to_model_range(hr_file)

    report = {
        "mode": req.mode,
        "input": str(req.input_path),
        "output": None if req.output_path is None else str(req.output_path),
        "scale": scale,
        "seed": req.seed,
        "prf": None,
        "psnr": None,
        "ssim": None,
        "low_err": None,
        "high_err": None,
        "fid": None,  # reserved; filled by external perceptual harnesses
        "timings": {},
    }

    select_start = time.perf_counter()
    if req.auto:
        result = select_injection_step(hr_model, lr_model, error_config, prf_config,
                                       schedule, scale=scale)
        report["prf"] = result.as_dict()
        if not result.feasible:
            report["error"] = "no feasible injection step under the configured thresholds"
            report["timings"]["select_s"] = time.perf_counter() - select_start
            report["timings"]["total_s"] = time.perf_counter() - t_start
            return report
        t = result.t_star
    elif req.noise_level is not None:
        t = step_for_noise_level(req.noise_level, schedule)
    else:
        t = int(req.t)
    report["t"] = t
    report["noise_level"] = noise_level(t, schedule)
    report["timings"]["select_s"] = time.perf_counter() - select_start

    sample_start = time.perf_counter()
    rng = np.random.default_rng(req.seed)
    out_model = super_resolve(lr_model, t, denoiser, sampler_config, schedule, rng)
    report["timings"]["sample_s"] = time.perf_counter() - sample_start

    out_file = to_file_range(out_model)
    if req.output_path is not None:
        save_png(req.output_path, out_file, bit_depth=req.output_bit_depth)

    if hr_file is not None:
        report["psnr"] = psnr(out_file, hr_file, peak=1.0)
        report["ssim"] = ssim(out_file, hr_file, peak=1.0)
        low, high, _ = freq_split_error(out_file, hr_file, freq_spec)
        report["low_err"] = low
        report["high_err"] = high

    report["timings"]["total_s"] = time.perf_counter() - t_start
    return report
