"""Image resampling and the degradation operator.

The degradation used for evaluation downsamples a native-resolution image
by an arbitrary (possibly non-integer) factor and upsamples it straight
back, which is how a fixed-resolution generative model sees "low
resolution" input. Intermediate dimensions use round-half-away-from-zero
so independent implementations agree on sizes like 256 / 2.7 -> 95.

Bicubic interpolation uses the Catmull-Rom kernel (a = -0.5); samples
outside the image take the clamped edge value. Coordinates map pixel
centers: src = (dst + 0.5) * (in_size / out_size) - 0.5. No antialias
prefilter is applied; the kernel is evaluated directly in both directions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

RESAMPLE_METHODS = ("nearest", "bicubic")
CUBIC_A = -0.5


def round_half_away_from_zero(x: float) -> int:
    return int(math.floor(x + 0.5)) if x >= 0 else -int(math.floor(-x + 0.5))


def cubic_kernel(x: np.ndarray, a: float = CUBIC_A) -> np.ndarray:
    """Keys cubic convolution kernel with parameter ``a``."""
    x = np.abs(np.asarray(x, dtype=np.float64))
    x2 = x * x
    x3 = x2 * x
    out = np.where(x <= 1.0,
                   (a + 2.0) * x3 - (a + 3.0) * x2 + 1.0,
                   np.where(x < 2.0,
                            a * x3 - 5.0 * a * x2 + 8.0 * a * x - 4.0 * a,
                            0.0))
    return out


def _source_positions(n_in: int, n_out: int) -> np.ndarray:
    scale = n_in / n_out
    return (np.arange(n_out, dtype=np.float64) + 0.5) * scale - 0.5


def resample_matrix(n_in: int, n_out: int, method: str) -> np.ndarray:
    """Dense (n_out, n_in) weight matrix for one axis."""
    if method not in RESAMPLE_METHODS:
        raise ValueError(f"method must be one of {RESAMPLE_METHODS}, got {method!r}")
    src = _source_positions(n_in, n_out)
    mat = np.zeros((n_out, n_in), dtype=np.float64)
    if method == "nearest":
        idx = np.clip(np.floor(src + 0.5).astype(int), 0, n_in - 1)
        mat[np.arange(n_out), idx] = 1.0
        return mat
    base = np.floor(src).astype(int)
    for offset in range(-1, 3):
        tap = base + offset
        w = cubic_kernel(src - tap)
        np.add.at(mat, (np.arange(n_out), np.clip(tap, 0, n_in - 1)), w)
    return mat


def resize(img: np.ndarray, out_h: int, out_w: int, method: str = "bicubic") -> np.ndarray:
    """Resample an (H, W, C) image to (out_h, out_w, C)."""
    img = np.asarray(img, dtype=np.float64)
    squeeze = img.ndim == 2
    if squeeze:
        img = img[:, :, None]
    if out_h < 1 or out_w < 1:
        raise ValueError(f"target size {out_h}x{out_w} must be positive")
    rows = resample_matrix(img.shape[0], out_h, method)
    cols = resample_matrix(img.shape[1], out_w, method)
    out = np.tensordot(rows, img, axes=(1, 0))          # (out_h, W, C)
    out = np.tensordot(cols, out, axes=(1, 1))          # (out_w, out_h, C)
    out = np.transpose(out, (1, 0, 2))
    return out[:, :, 0] if squeeze else out


@dataclass(frozen=True)
class DegradeSpec:
    """Down/up round trip at a given scale; methods are per direction."""

    scale: float
    down_method: str = "bicubic"
    up_method: str = "bicubic"

    def __post_init__(self):
        if self.scale < 1.0:
            raise ValueError(f"scale must be >= 1, got {self.scale}")
        for field_name in ("down_method", "up_method"):
            if getattr(self, field_name) not in RESAMPLE_METHODS:
                raise ValueError(f"{field_name} must be one of {RESAMPLE_METHODS}")


def degraded_size(n: int, scale: float) -> int:
    return max(1, round_half_away_from_zero(n / scale))


def degrade(hr: np.ndarray, spec: DegradeSpec) -> np.ndarray:
    """Downsample by ``spec.scale`` then upsample back to the input size."""
    hr = np.asarray(hr, dtype=np.float64)
    h, w = hr.shape[0], hr.shape[1]
    lo_h, lo_w = degraded_size(h, spec.scale), degraded_size(w, spec.scale)
    low = resize(hr, lo_h, lo_w, spec.down_method)
    return resize(low, h, w, spec.up_method)
