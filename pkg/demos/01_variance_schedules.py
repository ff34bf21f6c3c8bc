"""Tour of the five variance schedules.

Builds each schedule at the reference setting (T = 1000, beta from 1e-4
to 0.02 where applicable), compares their cumulative signal retention,
and dumps the linear schedule as CSV next to this script.
"""

import pathlib

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from diffusion_sr import build_schedule
from diffusion_sr.schedule import SCHEDULE_KINDS, schedule_to_csv

OUT = pathlib.Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(11, 4))
for kind in SCHEDULE_KINDS:
    sched = build_schedule(kind, 1000, 1e-4, 0.02)
    nl = np.arange(1001) / 1000
    ax1.plot(nl[1:], sched.betas, label=kind)
    ax2.plot(nl, sched.alpha_bars, label=kind)
    print(f"{kind:>15}: beta[1]={sched.beta(1):.3g}  beta[T]={sched.beta(1000):.3g}  "
          f"alpha_bar[T]={sched.alpha_bar(1000):.3e}")
ax1.set(xlabel="noise level t/T", ylabel="beta", title="per-step variance")
ax1.set_yscale("log")
ax2.set(xlabel="noise level t/T", ylabel="alpha_bar", title="cumulative signal retention")
for ax in (ax1, ax2):
    ax.legend()
    ax.grid(alpha=0.3)
fig.tight_layout()
fig.savefig(OUT / "schedules.png", dpi=120)
print(f"wrote {OUT / 'schedules.png'}")

with open(OUT / "schedule_linear.csv", "w") as fh:
    schedule_to_csv(build_schedule("linear", 1000, 1e-4, 0.02), fh)
print(f"wrote {OUT / 'schedule_linear.csv'}")
