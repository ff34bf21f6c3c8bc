"""Training-free arbitrary-scale super-resolution with diffusion priors.

The pipeline upsamples a degraded image to the working resolution,
injects a chosen number of forward-diffusion noise steps, and runs the
reverse sampler of a pretrained denoiser to regenerate the lost detail.
The injection step is picked by a constrained search over two analytic
loss curves: a growing signature bound (content at risk) and a shrinking
fidelity gap (blur left behind).
"""

from .container import load_weight_container, save_weight_container
from .denoisers import AnalyticGaussianDenoiser, RandomDenoiser, ZeroDenoiser
from .diffusion import (
    DenoiserContract,
    SamplerConfig,
    forward_marginal_sample,
    forward_step_sample,
    posterior_mean,
    predict_x0,
    reverse_from,
    reverse_step,
)
from .error_analysis import (
    ErrorModelConfig,
    LossCurve,
    cumulative_bound,
    estimate_e0,
    forward_gap_kl,
    loss_curve,
    loss_curve_from_stats,
    per_step_weight,
)
from .images import load_png, save_png, to_file_range, to_model_range
from .metrics import FreqSplitSpec, freq_split_error, psnr, ssim
from .pipeline import SrRequest, run_request, super_resolve
from .prf import (
    PrfConfig,
    PrfResult,
    compute_prf,
    estimate_degradation_energy,
    select_injection_step,
)
from .protocol import SubprocessDenoiser, SubprocessDenoiserConfig
from .resample import DegradeSpec, degrade, resize
from .schedule import NoiseSchedule, build_schedule, noise_level, step_for_noise_level
from .toydata import make_toy_corpus, make_toy_image

__version__ = "0.1.0"
