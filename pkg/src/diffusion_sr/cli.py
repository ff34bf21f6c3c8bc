"""Command-line interface.

Subcommands: ``schedule``, ``curves``, ``prf``, ``sr``, ``degrade``,
``metrics``, ``freq``. Shared settings are addressed as
``--section.key`` flags (e.g. ``--schedule.kind cosine``) and may also be
given in an INI config file with one section per module; flags override
the file. The default config path comes from ``DIFFUSION_SR_CONFIG``.

Exit codes: 0 success, 1 runtime failure, 2 usage or configuration
error. Stochastic commands accept ``--seed``; when omitted, a fresh seed
is drawn and echoed on stderr so the run can be reproduced.
"""

from __future__ import annotations

import argparse
import configparser
import json
import os
import shlex
import sys

import numpy as np

from .container import load_weight_container
from .denoisers import AnalyticGaussianDenoiser
from .diffusion import SamplerConfig
from .error_analysis import (
    DEFAULT_E0,
    DEFAULT_OMEGA,
    ErrorModelConfig,
    curve_to_csv,
    loss_curve,
)
from .errors import ConfigError, ContainerError, DenoiserError, NumericalError
from .images import load_png, save_png, to_model_range
from .metrics import FreqSplitSpec, freq_split_error, psnr, ssim
from .pipeline import SrRequest, run_request
from .prf import DEFAULT_C_F, DEFAULT_C_S, PrfConfig, compute_prf, constraint_margins
from .protocol import SubprocessDenoiser, SubprocessDenoiserConfig
from .resample import DegradeSpec, degrade
from .schedule import build_schedule, schedule_to_csv

CONFIG_ENV_VAR = "DIFFUSION_SR_CONFIG"

DEFAULTS = {
    "schedule": {"kind": "linear", "steps": "1000", "beta_start": "1e-4",
                 "beta_end": "0.02"},
    "sampler": {"family": "ddim", "eta": "0.0", "substeps": ""},
    "error_model": {"e0": str(DEFAULT_E0), "l0": "0.0", "omega": str(DEFAULT_OMEGA),
                    "variance_model": "ddpm", "prior_model": "zero",
                    "kl_formulation": "standard"},
    "prf": {"c_s": str(DEFAULT_C_S), "c_f": str(DEFAULT_C_F),
            "threshold_mode": "absolute"},
    "degrade": {"down": "bicubic", "up": "bicubic"},
}


def _load_settings(config_path: str | None) -> dict:
    settings = {section: dict(values) for section, values in DEFAULTS.items()}
    path = config_path or os.environ.get(CONFIG_ENV_VAR)
    if path:
        parser = configparser.ConfigParser()
        read = parser.read(path)
        if not read:
            raise ConfigError("config", f"cannot read config file {path!r}")
        for section in parser.sections():
            settings.setdefault(section, {}).update(dict(parser[section]))
    return settings


def _overlay_flags(settings: dict, args: argparse.Namespace) -> dict:
    for dest, value in vars(args).items():
        if "__" not in dest or value is None:
            continue
        section, key = dest.split("__", 1)
        settings.setdefault(section, {})[key] = str(value)
    return settings


def _add_section_flags(parser: argparse.ArgumentParser) -> None:
    grp = parser.add_argument_group("shared settings (--section.key, override the config file)")
    def flag(section, key, **kwargs):
        grp.add_argument(f"--{section.replace('_', '-')}.{key.replace('_', '-')}",
                         dest=f"{section}__{key}", default=None, **kwargs)
    flag("schedule", "kind", choices=["linear", "scaled_linear", "cosine",
                                      "squared_cosine", "sigmoid"])
    flag("schedule", "steps", type=int)
    flag("schedule", "beta_start", type=float)
    flag("schedule", "beta_end", type=float)
    flag("sampler", "family", choices=["ddpm", "ddim"])
    flag("sampler", "eta", type=float)
    flag("sampler", "substeps", type=int)
    flag("error_model", "e0", type=float)
    flag("error_model", "l0", type=float)
    flag("error_model", "omega", type=float)
    flag("error_model", "variance_model",
         choices=["ddpm", "ddim_paper", "ddim_standard"])
    flag("error_model", "prior_model", choices=["zero", "standard_normal_gap"])
    flag("error_model", "kl_formulation", choices=["standard", "paper"])
    flag("prf", "c_s", type=float)
    flag("prf", "c_f", type=float)
    flag("prf", "threshold_mode", choices=["absolute", "relative"])
    flag("degrade", "down", choices=["nearest", "bicubic"])
    flag("degrade", "up", choices=["nearest", "bicubic"])
    parser.add_argument("--config", default=None, help="INI config file "
                        f"(default from ${CONFIG_ENV_VAR})")


def _context(args: argparse.Namespace) -> dict:
    s = _overlay_flags(_load_settings(args.config), args)
    sched_s = s["schedule"]
    schedule = build_schedule(sched_s["kind"], int(sched_s["steps"]),
                              float(sched_s["beta_start"]), float(sched_s["beta_end"]))
    samp = s["sampler"]
    substeps = samp.get("substeps", "")
    sampler = SamplerConfig(
        family=samp["family"], ddim_eta=float(samp["eta"]),
        ddim_substeps=int(substeps) if str(substeps).strip() else None)
    err = s["error_model"]
    error_cfg = ErrorModelConfig(
        e0=float(err["e0"]), l0_const=float(err["l0"]), omega=float(err["omega"]),
        variance_model=err["variance_model"], prior_model=err["prior_model"],
        kl_formulation=err["kl_formulation"])
    prf_s = s["prf"]
    prf_cfg = PrfConfig(c_s=float(prf_s["c_s"]), c_f=float(prf_s["c_f"]),
                        threshold_mode=prf_s["threshold_mode"])
    return {"schedule": schedule, "sampler": sampler, "error": error_cfg,
            "prf": prf_cfg, "degrade": s["degrade"]}


def _resolve_seed(args) -> int:
    if getattr(args, "seed", None) is not None:
        return int(args.seed)
    seed = int(np.random.SeedSequence().entropy % (2 ** 32))
    print(f"seed: {seed}", file=sys.stderr)
    return seed


def _open_out(path: str | None):
    return open(path, "w") if path else sys.stdout


def _make_denoiser(spec: str, schedule, timeout: float):
    """``analytic[:mu,v]`` | ``container:PATH`` | ``subprocess:CMDLINE``."""
    if spec.startswith("analytic"):
        mu0, v0 = 0.0, 1.0
        if ":" in spec:
            parts = spec.split(":", 1)[1].split(",")
            mu0, v0 = float(parts[0]), float(parts[1])
        return AnalyticGaussianDenoiser(mu0, v0, schedule)
    if spec.startswith("container:"):
        return load_weight_container(spec.split(":", 1)[1], schedule=schedule)
    if spec.startswith("subprocess:"):
        argv = shlex.split(spec.split(":", 1)[1])
        return SubprocessDenoiser(SubprocessDenoiserConfig(argv=argv, timeout=timeout))
    raise ConfigError("denoiser",
                      f"expected analytic[:mu,v], container:PATH or subprocess:CMD, got {spec!r}")


def cmd_schedule(args) -> int:
    ctx = _context(args)
    out = _open_out(args.out)
    try:
        schedule_to_csv(ctx["schedule"], out)
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def _degrade_spec(ctx, scale: float) -> DegradeSpec:
    return DegradeSpec(scale=scale, down_method=ctx["degrade"]["down"],
                       up_method=ctx["degrade"]["up"])


def _curves_for(args, ctx):
    hr = to_model_range(load_png(args.hr))
    for scale in args.scale:
        lr = to_model_range(degrade(load_png(args.hr), _degrade_spec(ctx, scale)))
        yield scale, loss_curve(hr, lr, ctx["error"], ctx["schedule"])


def cmd_curves(args) -> int:
    ctx = _context(args)
    scales = args.scale
    if len(scales) == 1 and not args.out_dir:
        scale, curve = next(iter(_curves_for(args, ctx)))
        out = _open_out(args.out)
        try:
            curve_to_csv(curve, out)
        finally:
            if out is not sys.stdout:
                out.close()
        return 0
    out_dir = args.out_dir or "."
    os.makedirs(out_dir, exist_ok=True)
    for scale, curve in _curves_for(args, ctx):
        path = os.path.join(out_dir, f"curve_x{scale:g}.csv")
        with open(path, "w") as fh:
            curve_to_csv(curve, fh)
        print(path, file=sys.stderr)
    return 0


def cmd_prf(args) -> int:
    ctx = _context(args)
    reports = []
    for scale, curve in _curves_for(args, ctx):
        result = compute_prf(curve, ctx["prf"])
        entry = {"scale": scale, **result.as_dict()}
        entry["feasible_intervals_noise_level"] = [
            [iv[0] / curve.num_steps, iv[1] / curve.num_steps]
            for iv in result.feasible_set]
        if args.margins:
            entry["margins"] = constraint_margins(curve, ctx["prf"]).tolist()
        reports.append(entry)
    payload = reports[0] if len(reports) == 1 else reports
    out = _open_out(args.out)
    try:
        json.dump(payload, out, indent=2)
        out.write("\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_sr(args) -> int:
    ctx = _context(args)
    seed = _resolve_seed(args)
    denoiser = _make_denoiser(args.denoiser, ctx["schedule"], args.timeout)
    try:
        if args.deployment:
            req = SrRequest(input_path=args.input, output_path=args.out,
                            mode="deployment", scale=args.scale[0] if args.scale else None,
                            t=args.t, noise_level=args.noise_level, auto=args.auto,
                            seed=seed, output_bit_depth=args.bit_depth)
        else:
            if not args.scale:
                raise ConfigError("scale", "evaluation mode needs --scale")
            req = SrRequest(input_path=args.input, output_path=args.out,
                            degrade_spec=_degrade_spec(ctx, args.scale[0]),
                            t=args.t, noise_level=args.noise_level, auto=args.auto,
                            seed=seed, output_bit_depth=args.bit_depth)
        report = run_request(req, denoiser, ctx["schedule"], sampler_config=ctx["sampler"],
                             error_config=ctx["error"], prf_config=ctx["prf"])
    finally:
        if hasattr(denoiser, "close"):
            denoiser.close()
    text = json.dumps(report, indent=2)
    if args.report:
        with open(args.report, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 1 if "error" in report else 0


def cmd_degrade(args) -> int:
    ctx = _context(args)
    img = load_png(args.input)
    out = degrade(img, _degrade_spec(ctx, args.scale[0]))
    save_png(args.out, out, bit_depth=args.bit_depth)
    return 0


def _pair_rows(args, with_distortion: bool, fraction: float):
    spec = FreqSplitSpec(low_band_fraction=fraction)
    for a_path, b_path in args.pair:
        a = load_png(a_path)
        b = load_png(b_path)
        low, high, _ = freq_split_error(a, b, spec)
        row = {
            "image": a_path,
            "scale": "" if args.scale is None else f"{args.scale[0]:g}",
            "t": "" if args.t is None else str(args.t),
            "noise_level": "" if args.noise_level is None else f"{args.noise_level:g}",
            "psnr": f"{psnr(a, b):.6f}" if with_distortion else "",
            "ssim": f"{ssim(a, b):.6f}" if with_distortion else "",
            "low_err": f"{low:.10g}",
            "high_err": f"{high:.10g}",
        }
        yield row


def _write_metric_rows(rows, out_path) -> int:
    out = _open_out(out_path)
    try:
        out.write("image,scale,t,noise_level,psnr,ssim,low_err,high_err\n")
        for row in rows:
            out.write(",".join(row[k] for k in ("image", "scale", "t", "noise_level",
                                                "psnr", "ssim", "low_err", "high_err")) + "\n")
    finally:
        if out is not sys.stdout:
            out.close()
    return 0


def cmd_metrics(args) -> int:
    return _write_metric_rows(_pair_rows(args, True, args.fraction), args.out)


def cmd_freq(args) -> int:
    return _write_metric_rows(_pair_rows(args, False, args.fraction), args.out)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="diffusion-sr",
        description="Training-free arbitrary-scale super-resolution with diffusion priors")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scales=False, seeded=False, pairs=False):
        _add_section_flags(p)
        p.add_argument("--out", default=None, help="output file (default stdout)")
        if scales:
            p.add_argument("--scale", type=float, action="append",
                           help="upsampling scale; repeatable")
        if seeded:
            p.add_argument("--seed", type=int, default=None)
        if pairs:
            p.add_argument("--pair", nargs=2, action="append", required=True,
                           metavar=("RECOVERED", "REFERENCE"))
            p.add_argument("--scale", type=float, action="append", default=None)
            p.add_argument("--t", type=int, default=None)
            p.add_argument("--noise-level", type=float, default=None)
            p.add_argument("--fraction", type=float, default=0.25,
                           help="low-band fraction for the frequency split")

    p = sub.add_parser("schedule", help="dump the variance schedule as CSV")
    common(p)
    p.set_defaults(func=cmd_schedule)

    p = sub.add_parser("curves", help="signature/fidelity loss curves as CSV")
    common(p, scales=True)
    p.add_argument("--hr", required=True, help="ground-truth image (PNG)")
    p.add_argument("--out-dir", default=None, help="one CSV per scale")
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("prf", help="search the recoverable band, report JSON")
    common(p, scales=True)
    p.add_argument("--hr", required=True)
    p.add_argument("--margins", action="store_true",
                   help="include per-step constraint margins")
    p.set_defaults(func=cmd_prf)

    p = sub.add_parser("sr", help="run super-resolution on one image")
    common(p, scales=True, seeded=True)
    p.add_argument("--input", required=True)
    p.add_argument("--deployment", action="store_true",
                   help="input is already degraded; never reads ground truth")
    p.add_argument("--t", type=int, default=None)
    p.add_argument("--noise-level", type=float, default=None)
    p.add_argument("--auto", action="store_true", help="select t by PRF search")
    p.add_argument("--denoiser", default="analytic:0,1",
                   help="analytic[:mu,v] | container:PATH | subprocess:CMDLINE")
    p.add_argument("--timeout", type=float, default=60.0,
                   help="frame timeout for subprocess denoisers (s)")
    p.add_argument("--report", default=None, help="write the JSON report here too")
    p.add_argument("--bit-depth", type=int, default=8, choices=(8, 16))
    p.set_defaults(func=cmd_sr)

    p = sub.add_parser("degrade", help="down/upsample round trip")
    common(p, scales=True)
    p.add_argument("--input", required=True)
    p.add_argument("--bit-depth", type=int, default=8, choices=(8, 16))
    p.set_defaults(func=cmd_degrade)

    p = sub.add_parser("metrics", help="PSNR/SSIM/frequency-split batch CSV")
    common(p, pairs=True)
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("freq", help="frequency-split batch CSV")
    common(p, pairs=True)
    p.set_defaults(func=cmd_freq)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "command", None) in ("sr", "degrade"):
        if args.command == "degrade" and not args.scale:
            parser.error("degrade needs --scale")
    try:
        return args.func(args)
    except (ContainerError, DenoiserError, NumericalError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
