"""Distortion metrics and the frequency-band error split.

PSNR and SSIM follow the usual benchmark conventions (SSIM on Rec. 601
luma with an 11x11 Gaussian window, sigma 1.5). The frequency split
measures how much of the squared error between two images lives in a
centered low-frequency box of the shifted spectrum versus outside it;
sums are normalized so the two bands add up exactly to the spatial sum
of squared differences (Parseval).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import fftconvolve

from .images import luma

PSNR_CAP_DB = 99.0

SSIM_WINDOW = 11
SSIM_SIGMA = 1.5
SSIM_K1 = 0.01
SSIM_K2 = 0.03


def psnr(a: np.ndarray, b: np.ndarray, peak: float = 1.0) -> float:
    """10 log10(peak^2 / MSE), capped at 99 dB when the images agree."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    if peak <= 0:
        raise ValueError(f"peak must be > 0, got {peak}")
    mse = float(np.mean((a - b) ** 2))
    if mse == 0.0:
        return PSNR_CAP_DB
    return min(10.0 * np.log10(peak ** 2 / mse), PSNR_CAP_DB)


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    half = (size - 1) / 2.0
    x = np.arange(size) - half
    g = np.exp(-(x ** 2) / (2.0 * sigma ** 2))
    g /= g.sum()
    return np.outer(g, g)


def ssim(a: np.ndarray, b: np.ndarray, peak: float = 1.0,
         window_size: int = SSIM_WINDOW, sigma: float = SSIM_SIGMA,
         k1: float = SSIM_K1, k2: float = SSIM_K2) -> float:
    """Mean local structural similarity over valid window positions."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    ya = luma(a) if a.ndim == 3 else a
    yb = luma(b) if b.ndim == 3 else b
    if min(ya.shape) < window_size:
        raise ValueError(f"image {ya.shape} smaller than the {window_size}x{window_size} window")

    win = _gaussian_window(window_size, sigma)
    c1 = (k1 * peak) ** 2
    c2 = (k2 * peak) ** 2

    def filt(img):
        return fftconvolve(img, win, mode="valid")

    mu_a = filt(ya)
    mu_b = filt(yb)
    mu_aa = mu_a * mu_a
    mu_bb = mu_b * mu_b
    mu_ab = mu_a * mu_b
    var_a = filt(ya * ya) - mu_aa
    var_b = filt(yb * yb) - mu_bb
    cov = filt(ya * yb) - mu_ab

    num = (2 * mu_ab + c1) * (2 * cov + c2)
    den = (mu_aa + mu_bb + c1) * (var_a + var_b + c2)
    return float(np.mean(num / den))


@dataclass(frozen=True)
class FreqSplitSpec:
    """Fraction of each spectral axis assigned to the centered low band."""

    low_band_fraction: float = 0.25

    def __post_init__(self):
        if not 0.0 < self.low_band_fraction <= 1.0:
            raise ValueError(
                f"low_band_fraction must be in (0, 1], got {self.low_band_fraction}")


def _box_bounds(dim: int, fraction: float) -> tuple[int, int]:
    side = max(1, int(round(fraction * dim)))
    center = dim // 2
    start = center - side // 2
    return max(0, start), min(dim, start + side)


def freq_split_error(a: np.ndarray, b: np.ndarray,
                     spec: FreqSplitSpec = FreqSplitSpec()) -> tuple[float, float, float]:
    """(low_err, high_err, total_err) of the difference spectrum.

    total_err equals the spatial sum of squared differences; the low band
    is the centered box of side round(fraction * dim) on each axis of the
    shifted spectrum.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    if diff.ndim == 2:
        diff = diff[:, :, None]
    h, w = diff.shape[:2]
    y0, y1 = _box_bounds(h, spec.low_band_fraction)
    x0, x1 = _box_bounds(w, spec.low_band_fraction)
    low = high = 0.0
    for c in range(diff.shape[2]):
        power = np.abs(np.fft.fftshift(np.fft.fft2(diff[:, :, c]))) ** 2 / (h * w)
        box = power[y0:y1, x0:x1].sum()
        low += box
        high += power.sum() - box
    return float(low), float(high), float(low + high)
