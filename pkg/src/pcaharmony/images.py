"""PNG loading, saving and resampling.

Images are 2-D float64 arrays with intensities in [0, 1]; masks are 2-D
uint8 arrays holding {0, 1}. Resampling uses the half-pixel coordinate
convention (corner-aligned false): output pixel j along an axis samples
source position (j + 0.5) * (src / dst) - 0.5.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np
from PIL import Image as _PILImage, UnidentifiedImageError

LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

# 8-bit modes this toolkit understands; everything else is refused so a
# 16-bit scan cannot slip through and silently lose precision
_ACCEPTED_MODES = {"1", "L", "LA", "P", "RGB", "RGBA"}


class IngestError(RuntimeError):
    """An input file could not be turned into a usable image."""


def load_image(path) -> np.ndarray:
    """Read an 8-bit grayscale or RGB PNG into a [0, 1] float64 array.

    RGB input is collapsed to one channel with luma weights
    0.299 / 0.587 / 0.114 before the 1/255 scaling.
    """
    p = Path(path)
    try:
        with _PILImage.open(p) as img:
            if img.mode not in _ACCEPTED_MODES:
                raise IngestError(
                    f"{p}: unsupported bit depth or mode {img.mode!r}, expected 8-bit grayscale or RGB"
                )
            if img.mode in ("RGB", "RGBA", "P", "LA"):
                rgb = np.asarray(img.convert("RGB"), dtype=np.float64)
                return (rgb @ LUMA_WEIGHTS) / 255.0
            return np.asarray(img.convert("L"), dtype=np.float64) / 255.0
    except (FileNotFoundError, UnidentifiedImageError, OSError) as exc:
        raise IngestError(f"{p}: cannot read image ({exc})") from exc


def load_mask(path) -> np.ndarray:
    """Read a mask PNG and binarize it at one half."""
    return (load_image(path) >= 0.5).astype(np.uint8)


def save_image(path, values: np.ndarray) -> None:
    """Write a [0, 1] float array as an 8-bit grayscale PNG, clamping first."""
    clipped = np.clip(np.asarray(values, dtype=np.float64), 0.0, 1.0)
    raw = np.rint(clipped * 255.0).astype(np.uint8)
    _PILImage.fromarray(raw, mode="L").save(Path(path))


def save_mask(path, mask: np.ndarray) -> None:
    """Write a {0, 1} mask as a 0/255 grayscale PNG."""
    raw = (np.asarray(mask, dtype=np.uint8) * 255).astype(np.uint8)
    _PILImage.fromarray(raw, mode="L").save(Path(path))


def _axis_samples(src: int, dst: int):
    pos = (np.arange(dst) + 0.5) * (src / dst) - 0.5
    lo = np.floor(pos).astype(np.int64)
    frac = pos - lo
    lo0 = np.clip(lo, 0, src - 1)
    lo1 = np.clip(lo + 1, 0, src - 1)
    return lo0, lo1, frac


def resize_bilinear(values: np.ndarray, height: int, width: int) -> np.ndarray:
    """Resample a 2-D array to (height, width) with bilinear interpolation."""
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {v.shape}")
    if height < 1 or width < 1:
        raise ValueError(f"target size must be positive, got {height}x{width}")
    r0, r1, fr = _axis_samples(v.shape[0], height)
    c0, c1, fc = _axis_samples(v.shape[1], width)
    top = v[r0][:, c0] * (1.0 - fc) + v[r0][:, c1] * fc
    bottom = v[r1][:, c0] * (1.0 - fc) + v[r1][:, c1] * fc
    return top * (1.0 - fr)[:, None] + bottom * fr[:, None]


def resize_nearest(values: np.ndarray, height: int, width: int) -> np.ndarray:
    """Resample a 2-D array to (height, width) picking the nearest source pixel."""
    v = np.asarray(values)
    if v.ndim != 2:
        raise ValueError(f"expected a 2-D array, got shape {v.shape}")
    if height < 1 or width < 1:
        raise ValueError(f"target size must be positive, got {height}x{width}")
    rows = _nearest_indices(v.shape[0], height)
    cols = _nearest_indices(v.shape[1], width)
    return v[rows][:, cols]


def _nearest_indices(src: int, dst: int) -> np.ndarray:
    pos = (np.arange(dst) + 0.5) * (src / dst) - 0.5
    return np.clip(np.floor(pos + 0.5).astype(np.int64), 0, src - 1)


def resize_mask(mask: np.ndarray, height: int, width: int) -> np.ndarray:
    """Resize a binary mask with nearest-neighbor sampling.

    The result is re-thresholded at one half so the output is guaranteed to
    stay in {0, 1} even if the input was a probability-like array.
    """
    out = resize_nearest(np.asarray(mask, dtype=np.float64), height, width)
    return (out >= 0.5).astype(np.uint8)
