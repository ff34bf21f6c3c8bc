"""Image array conventions and PNG I/O.

Images are dense float64 arrays of shape (H, W, C) with C in {1, 3}.
Two value ranges appear in the pipeline:

* file range [0, 1]: what PNG readers/writers see (v/255 or v/65535),
* model range [-1, 1]: what the diffusion operators see.

``to_model_range`` / ``to_file_range`` are the affine maps between them.
"""

from __future__ import annotations

import numpy as np

try:
    import cv2
except ImportError:  # pragma: no cover - cv2 is a declared dependency
    cv2 = None

REC601_WEIGHTS = np.array([0.299, 0.587, 0.114])


def validate_image(img: np.ndarray, name: str = "image") -> np.ndarray:
    """Check the (H, W, C) convention and the finite-values boundary guarantee."""
    img = np.asarray(img)
    if img.ndim == 2:
        img = img[:, :, None]
    if img.ndim != 3:
        raise ValueError(f"{name}: expected (H, W, C) array, got shape {img.shape}")
    if img.shape[0] < 1 or img.shape[1] < 1 or img.shape[2] < 1:
        raise ValueError(f"{name}: empty dimension in shape {img.shape}")
    if not np.all(np.isfinite(img)):
        raise ValueError(f"{name}: contains NaN or Inf")
    return np.asarray(img, dtype=np.float64)


def to_model_range(img: np.ndarray) -> np.ndarray:
    """[0, 1] file range -> [-1, 1] model range."""
    return np.asarray(img, dtype=np.float64) * 2.0 - 1.0


def to_file_range(img: np.ndarray) -> np.ndarray:
    """[-1, 1] model range -> [0, 1] file range, clipped."""
    return np.clip((np.asarray(img, dtype=np.float64) + 1.0) / 2.0, 0.0, 1.0)


def luma(img: np.ndarray) -> np.ndarray:
    """Rec. 601 luma of an (H, W, C) image; single-channel input passes through."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim == 2:
        return img
    if img.shape[2] == 1:
        return img[:, :, 0]
    if img.shape[2] != 3:
        raise ValueError(f"expected 1 or 3 channels, got {img.shape[2]}")
    return img @ REC601_WEIGHTS


def load_png(path) -> np.ndarray:
    """Read an 8- or 16-bit PNG into a float64 (H, W, C) array in [0, 1]."""
    raw = cv2.imread(str(path), cv2.IMREAD_UNCHANGED)
    if raw is None:
        raise IOError(f"cannot read image: {path}")
    if raw.ndim == 2:
        raw = raw[:, :, None]
    if raw.shape[2] == 4:
        raw = raw[:, :, :3]
    if raw.shape[2] == 3:
        raw = raw[:, :, ::-1]  # BGR -> RGB
    if raw.dtype == np.uint8:
        return raw.astype(np.float64) / 255.0
    if raw.dtype == np.uint16:
        return raw.astype(np.float64) / 65535.0
    raise IOError(f"unsupported PNG sample type {raw.dtype} in {path}")


def save_png(path, img: np.ndarray, bit_depth: int = 8) -> None:
    """Write a [0, 1] float image as an 8- or 16-bit PNG."""
    img = validate_image(img, "output image")
    if bit_depth == 8:
        scaled = np.round(np.clip(img, 0.0, 1.0) * 255.0).astype(np.uint8)
    elif bit_depth == 16:
        scaled = np.round(np.clip(img, 0.0, 1.0) * 65535.0).astype(np.uint16)
    else:
        raise ValueError(f"bit_depth must be 8 or 16, got {bit_depth}")
    if scaled.shape[2] == 3:
        scaled = scaled[:, :, ::-1]  # RGB -> BGR
    elif scaled.shape[2] == 1:
        scaled = scaled[:, :, 0]
    if not cv2.imwrite(str(path), scaled):
        raise IOError(f"cannot write image: {path}")
