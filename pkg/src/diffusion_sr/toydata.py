"""Deterministic procedural test images.

The bundled "toy corpus" is a set of synthetic photographs-in-spirit:
a power-law random field (natural-image-like 1/f amplitude spectrum)
overlaid with hard-edged shapes and a sinusoidal texture patch, so that
downsampling genuinely destroys measurable high-frequency content.
Shape counts and blend strengths are kept in narrow ranges so the corpus
is texturally homogeneous: per-image degradation energies then separate
cleanly between moderate (<= 4x) and extreme (8x) scales, which the
feasibility tests rely on. Everything is keyed by (seed, index), so the
corpus is bit-stable across runs with the same NumPy generator.

Images are returned in the file range [0, 1], shape (size, size, 3).
"""

from __future__ import annotations

import numpy as np

SPECTRAL_SLOPE = 1.1  # amplitude ~ 1/f**slope, close to natural-image statistics


def _power_law_field(size: int, rng: np.random.Generator, slope: float) -> np.ndarray:
    fy = np.fft.fftfreq(size)[:, None]
    fx = np.fft.fftfreq(size)[None, :]
    f = np.hypot(fy, fx)
    f[0, 0] = 1.0
    amp = 1.0 / f ** slope
    amp[0, 0] = 0.0
    phase = rng.uniform(0, 2 * np.pi, (size, size))
    field = np.fft.ifft2(amp * np.exp(1j * phase)).real
    field -= field.mean()
    std = field.std()
    return field / std if std > 0 else field


def make_toy_image(size: int = 128, seed: int = 0) -> np.ndarray:
    rng = np.random.default_rng((0x7D5F, seed))
    img = np.zeros((size, size, 3))
    base = _power_law_field(size, rng, SPECTRAL_SLOPE)
    for c in range(3):
        img[:, :, c] = 0.75 * (0.5 + 0.18 * base + 0.10 * _power_law_field(size, rng, SPECTRAL_SLOPE))

    yy, xx = np.mgrid[0:size, 0:size]
    for k in range(5):
        color = rng.uniform(0.15, 0.85, 3)
        if k % 2 == 0:
            y0, x0 = rng.integers(0, 3 * size // 4, 2)
            h, w = rng.integers(size // 6, size // 3, 2)
            mask = (yy >= y0) & (yy < y0 + h) & (xx >= x0) & (xx < x0 + w)
        else:
            cy, cx = rng.integers(size // 6, 5 * size // 6, 2)
            r = rng.integers(size // 10, size // 5)
            mask = (yy - cy) ** 2 + (xx - cx) ** 2 < r ** 2
        img[mask] = 0.2 * img[mask] + 0.8 * color

    # one oriented texture patch with mid-band frequency content
    freq = rng.uniform(0.10, 0.16)
    angle = rng.uniform(0, np.pi)
    stripes = 0.5 + 0.5 * np.sin(2 * np.pi * freq * (np.cos(angle) * xx + np.sin(angle) * yy))
    py, px = rng.integers(0, size // 2, 2)
    side = size // 3
    img[py:py + side, px:px + side] = (0.7 * img[py:py + side, px:px + side]
                                       + 0.3 * stripes[py:py + side, px:px + side, None])

    return np.clip(img, 0.0, 1.0)


def make_toy_corpus(count: int = 8, size: int = 128, seed: int = 0) -> list[np.ndarray]:
    return [make_toy_image(size=size, seed=seed * 1000 + i) for i in range(count)]
