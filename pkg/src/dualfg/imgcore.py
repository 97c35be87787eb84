"""Image containers, colour conversions and histogram helpers.

Frames are plain numpy arrays of float64 in [0, 1]: ``(H, W)`` for a
single channel (luminance) and ``(H, W, 3)`` for RGB. Binary masks are
``(H, W)`` bool arrays with True meaning foreground. 8-bit data only
appears at the I/O boundary (see :mod:`dualfg.io`).
"""
from __future__ import annotations

import numpy as np

__all__ = [
    "as_frame",
    "check_frame",
    "check_mask",
    "rgb_to_hsv",
    "hsv_to_rgb",
    "rgb_to_lab_l",
    "to_luma",
    "histogram",
    "global_mean",
]

# sRGB (Rec. 709 primaries) to relative luminance Y, D65 white
_Y_COEFFS = np.array([0.2126, 0.7152, 0.0722])
_LAB_EPS = (6.0 / 29.0) ** 3
_LAB_KAPPA = 1.0 / (3.0 * (6.0 / 29.0) ** 2)


def as_frame(data, *, copy: bool = False) -> np.ndarray:
    """Coerce ``data`` into a float64 frame and validate it."""
    arr = np.array(data, dtype=np.float64) if copy else np.asarray(data, dtype=np.float64)
    check_frame(arr)
    return arr


def check_frame(f: np.ndarray, channels: int | None = None) -> None:
    if f.ndim == 2:
        ch = 1
    elif f.ndim == 3 and f.shape[2] == 3:
        ch = 3
    else:
        raise ValueError(f"frame must be (H, W) or (H, W, 3), got shape {f.shape}")
    if f.shape[0] < 1 or f.shape[1] < 1:
        raise ValueError(f"frame has empty dimension: {f.shape}")
    if channels is not None and ch != channels:
        raise ValueError(f"expected {channels}-channel frame, got {ch} channel(s)")
    if not np.all(np.isfinite(f)):
        raise ValueError("frame contains non-finite values")
    if f.size and (f.min() < 0.0 or f.max() > 1.0):
        raise ValueError("frame values must lie in [0, 1]")


def check_mask(m: np.ndarray, shape: tuple[int, int] | None = None) -> None:
    if m.ndim != 2 or m.dtype != np.bool_:
        raise ValueError(f"mask must be a 2-D bool array, got {m.dtype} {m.shape}")
    if shape is not None and m.shape != tuple(shape):
        raise ValueError(f"mask shape {m.shape} does not match {tuple(shape)}")


def rgb_to_hsv(rgb) -> np.ndarray:
    """Hexcone RGB -> HSV on the last axis. Hue in degrees [0, 360)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = np.max(rgb, axis=-1)
    c = v - np.min(rgb, axis=-1)
    safe_c = np.where(c > 0, c, 1.0)
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)

    h = np.zeros_like(v)
    rmax = (v == r) & (c > 0)
    gmax = (v == g) & (c > 0) & ~rmax
    bmax = (c > 0) & ~rmax & ~gmax
    h = np.where(rmax, np.mod((g - b) / safe_c, 6.0), h)
    h = np.where(gmax, (b - r) / safe_c + 2.0, h)
    h = np.where(bmax, (r - g) / safe_c + 4.0, h)
    h = h * 60.0
    # mod(., 6) can round up to exactly 360 for tiny negative inputs
    h = np.where(h >= 360.0, h - 360.0, h)
    return np.stack([h, s, v], axis=-1)


def hsv_to_rgb(hsv) -> np.ndarray:
    """Inverse of :func:`rgb_to_hsv`."""
    hsv = np.asarray(hsv, dtype=np.float64)
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    hp = np.mod(h, 360.0) / 60.0
    c = v * s
    x = c * (1.0 - np.abs(np.mod(hp, 2.0) - 1.0))
    m = v - c
    sector = np.floor(hp).astype(np.int64) % 6
    zero = np.zeros_like(c)
    r = np.choose(sector, [c, x, zero, zero, x, c])
    g = np.choose(sector, [x, c, c, x, zero, zero])
    b = np.choose(sector, [zero, zero, x, c, c, x])
    return np.stack([r + m, g + m, b + m], axis=-1)


def _srgb_to_linear(c: np.ndarray) -> np.ndarray:
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def rgb_to_lab_l(rgb) -> np.ndarray:
    """CIE L* of sRGB input (D65), rescaled from [0, 100] to [0, 1]."""
    rgb = np.asarray(rgb, dtype=np.float64)
    lin = _srgb_to_linear(rgb)
    y = lin @ _Y_COEFFS
    fy = np.where(y > _LAB_EPS, np.cbrt(y), y * _LAB_KAPPA + 4.0 / 29.0)
    lum = (116.0 * fy - 16.0) / 100.0
    return np.clip(lum, 0.0, 1.0)


def to_luma(f: np.ndarray) -> np.ndarray:
    """Lab L of an RGB frame; single-channel frames are taken as luma already."""
    if f.ndim == 2:
        return np.asarray(f, dtype=np.float64)
    check_frame(f, channels=3)
    return rgb_to_lab_l(f)


def histogram(img: np.ndarray) -> np.ndarray:
    """256-bin histogram of a single-channel frame; bin = floor(v * 255)."""
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("histogram needs a single-channel frame")
    bins = np.minimum(np.floor(img.ravel() * 255.0).astype(np.int64), 255)
    bins = np.maximum(bins, 0)
    return np.bincount(bins, minlength=256)


def global_mean(img: np.ndarray) -> float:
    img = np.asarray(img, dtype=np.float64)
    if img.ndim != 2:
        raise ValueError("global_mean needs a single-channel frame")
    if img.size == 0:
        raise ValueError("global_mean of an empty image")
    # the true mean lies in [min, max]; rounding in the sum must not push it
    # outside, or a constant image would exceed its own mean
    return float(np.clip(img.sum() / img.size, img.min(), img.max()))
