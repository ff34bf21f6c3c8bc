"""The two loss curves and the recoverable band they carve out.

For one test image degraded at several scales, plots the signature curve
(grows with t: content at risk) against the weighted fidelity curve
(shrinks with t: blur left behind), with the default thresholds overlaid.
The feasible band is where both constraints hold; its total-loss argmin
is the selected injection step. At 8x the curves never fit under the
thresholds simultaneously and the band is empty.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from diffusion_sr import ErrorModelConfig, PrfConfig, build_schedule, compute_prf, loss_curve
from diffusion_sr.images import to_model_range
from diffusion_sr.resample import DegradeSpec, degrade
from diffusion_sr.toydata import make_toy_image

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

sched = build_schedule("linear", 1000, 1e-4, 0.02)
img = make_toy_image(size=128, seed=11)
hr = to_model_range(img)
config = ErrorModelConfig()
prf_config = PrfConfig()

scales = [2.0, 2.7, 4.0, 8.0]
fig, axes = plt.subplots(1, len(scales), figsize=(4.2 * len(scales), 3.6), sharey=True)
for ax, scale in zip(axes, scales):
    lr = to_model_range(degrade(img, DegradeSpec(scale=scale)))
    curve = loss_curve(hr, lr, config, sched)
    result = compute_prf(curve, prf_config)
    nl = curve.noise_levels
    ax.plot(nl[1:], curve.signature[1:], label="signature loss")
    ax.plot(nl[1:], curve.weighted_fidelity[1:], label="weighted fidelity loss")
    ax.axhline(prf_config.c_s, color="tab:blue", ls="--", lw=0.8, label="signature threshold")
    ax.axhline(prf_config.c_f, color="tab:orange", ls="--", lw=0.8, label="fidelity threshold")
    if result.feasible:
        lo, hi = result.feasible_set[0][0], result.feasible_set[-1][1]
        ax.axvspan(nl[lo], nl[hi], color="tab:green", alpha=0.15, label="recoverable band")
        ax.axvline(nl[result.t_star], color="tab:green", lw=1.5)
        title = f"{scale:g}x: t*/T = {nl[result.t_star]:.2f}"
    else:
        title = f"{scale:g}x: no recoverable band"
    print(title, "| intervals:", result.feasible_set)
    ax.set(title=title, xlabel="noise level t/T")
    ax.set_yscale("log")
    ax.grid(alpha=0.3)
axes[0].set_ylabel("loss")
axes[0].legend(fontsize=7)
fig.tight_layout()
fig.savefig(OUT / "band_search.png", dpi=120)
print(f"wrote {OUT / 'band_search.png'}")
