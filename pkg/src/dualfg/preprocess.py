"""ROI cropping, two-direction illumination equalization and de-hazing.

Equalization works on the HSV value channel. For every row the mean
luminance of a ``(2p+1) x (2q+1)`` block at the left image edge and one at
the right image edge are compared; their difference is spread across the
row with the linear weight ``a_j = (n - 2j + 1) / (2(n - 1))`` (1-based
``j``), which is +1/2 at the left edge, 0 in the middle and -1/2 at the
right edge. The vertical pass does the same with top/bottom blocks. Block
rows (columns) are clamped so the block stays inside the image.

De-hazing is the dark channel prior with a box-filtered transmission map.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import kernels
from .imgcore import check_frame, hsv_to_rgb, rgb_to_hsv

__all__ = [
    "Roi",
    "EqualizationParams",
    "DehazeParams",
    "crop_roi",
    "edge_means",
    "equalize_horizontal",
    "equalize_vertical",
    "illumination_equalize",
    "dark_channel",
    "estimate_atmospheric_light",
    "estimate_transmission",
    "recover_radiance",
    "dehaze",
    "box_mean",
]


@dataclass(frozen=True)
class Roi:
    x: int
    y: int
    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"ROI width/height must be >= 1, got {self.width}x{self.height}")
        if self.x < 0 or self.y < 0:
            raise ValueError(f"ROI origin must be non-negative, got ({self.x}, {self.y})")

    def check_inside(self, width: int, height: int) -> None:
        if self.x + self.width > width or self.y + self.height > height:
            raise ValueError(
                f"ROI x=[{self.x}, {self.x + self.width}) y=[{self.y}, {self.y + self.height}) "
                f"exceeds frame bounds {width}x{height}"
            )


@dataclass(frozen=True)
class EqualizationParams:
    p: int = 7  # half-height of the local block
    q: int = 7  # half-width

    def __post_init__(self):
        if self.p < 1 or self.q < 1:
            raise ValueError("equalization p and q must be >= 1")

    def check_image(self, height: int, width: int) -> None:
        if 2 * self.p + 1 > height or 2 * self.q + 1 > width:
            raise ValueError(
                f"local region {2 * self.p + 1}x{2 * self.q + 1} does not fit image {height}x{width}"
            )


@dataclass(frozen=True)
class DehazeParams:
    patch_radius: int = 7
    omega: float = 0.95
    t_floor: float = 0.1
    airlight_fraction: float = 0.001
    refine_radius: int = 7  # box filter on the transmission map; 0 disables

    def __post_init__(self):
        if self.patch_radius < 0 or self.refine_radius < 0:
            raise ValueError("dehaze radii must be >= 0")
        if not 0.0 <= self.omega <= 1.0:
            raise ValueError("omega must lie in [0, 1]")
        if not 0.0 < self.t_floor < 1.0:
            raise ValueError("t_floor must lie in (0, 1)")
        if not 0.0 < self.airlight_fraction <= 1.0:
            raise ValueError("airlight_fraction must lie in (0, 1]")


def crop_roi(f: np.ndarray, r: Roi) -> np.ndarray:
    h, w = f.shape[:2]
    r.check_inside(w, h)
    return f[r.y:r.y + r.height, r.x:r.x + r.width].copy()


# ---------------------------------------------------------------------------
# illumination equalization

def _band_centers(size: int, half: int) -> np.ndarray:
    """Clamped block centre for every row/column index (0-based)."""
    return np.clip(np.arange(size), half, size - 1 - half)


def _windowed_mean(values: np.ndarray, centers: np.ndarray, half: int) -> np.ndarray:
    # values: 1-D per-line sums of an edge block; mean over 2*half+1 lines
    csum = np.concatenate([[0.0], np.cumsum(values)])
    return csum[centers + half + 1] - csum[centers - half]


def _row_edge_means(luma: np.ndarray, params: EqualizationParams) -> tuple[np.ndarray, np.ndarray]:
    m, n = luma.shape
    params.check_image(m, n)
    p, q = params.p, params.q
    area = (2 * p + 1) * (2 * q + 1)
    centers = _band_centers(m, p)
    left = _windowed_mean(luma[:, :2 * q + 1].sum(axis=1), centers, p) / area
    right = _windowed_mean(luma[:, n - 2 * q - 1:].sum(axis=1), centers, p) / area
    return left, right


def _col_edge_means(luma: np.ndarray, params: EqualizationParams) -> tuple[np.ndarray, np.ndarray]:
    m, n = luma.shape
    params.check_image(m, n)
    p, q = params.p, params.q
    area = (2 * p + 1) * (2 * q + 1)
    centers = _band_centers(n, q)
    top = _windowed_mean(luma[:2 * p + 1, :].sum(axis=0), centers, q) / area
    bottom = _windowed_mean(luma[m - 2 * p - 1:, :].sum(axis=0), centers, q) / area
    return top, bottom


def edge_means(luma: np.ndarray, params: EqualizationParams, i: int, j: int | None = None):
    """Edge-block means ``(l_i, r_i, t_j, b_j)`` for row ``i`` and column ``j``.

    Indices are 0-based; ``j`` defaults to ``i``.
    """
    luma = np.asarray(luma, dtype=np.float64)
    m, n = luma.shape
    j = i if j is None else j
    if not (0 <= i < m and 0 <= j < n):
        raise IndexError(f"index ({i}, {j}) outside image {m}x{n}")
    left, right = _row_edge_means(luma, params)
    top, bottom = _col_edge_means(luma, params)
    return float(left[i]), float(right[i]), float(top[j]), float(bottom[j])


def _ramp_weights(size: int) -> np.ndarray:
    k = np.arange(1, size + 1, dtype=np.float64)
    return (size - 2 * k + 1) / (2.0 * (size - 1))


def equalize_horizontal(luma: np.ndarray, params: EqualizationParams, *, clip: bool = True) -> np.ndarray:
    luma = np.asarray(luma, dtype=np.float64)
    if luma.ndim != 2:
        raise ValueError("equalization needs a single-channel image")
    if luma.shape[1] < 2:
        raise ValueError("horizontal equalization needs at least 2 columns")
    left, right = _row_edge_means(luma, params)
    out = luma + np.outer(right - left, _ramp_weights(luma.shape[1]))
    return np.clip(out, 0.0, 1.0) if clip else out


def equalize_vertical(luma: np.ndarray, params: EqualizationParams, *, clip: bool = True) -> np.ndarray:
    luma = np.asarray(luma, dtype=np.float64)
    if luma.ndim != 2:
        raise ValueError("equalization needs a single-channel image")
    if luma.shape[0] < 2:
        raise ValueError("vertical equalization needs at least 2 rows")
    top, bottom = _col_edge_means(luma, params)
    out = luma + np.outer(_ramp_weights(luma.shape[0]), bottom - top)
    return np.clip(out, 0.0, 1.0) if clip else out


def illumination_equalize(f: np.ndarray, params: EqualizationParams) -> np.ndarray:
    """Equalize the V channel of an RGB frame, horizontal pass then vertical."""
    check_frame(f, channels=3)
    hsv = rgb_to_hsv(f)
    v = equalize_vertical(equalize_horizontal(hsv[..., 2], params), params)
    hsv[..., 2] = v
    return np.clip(hsv_to_rgb(hsv), 0.0, 1.0)


# ---------------------------------------------------------------------------
# de-hazing

def dark_channel(f: np.ndarray, patch_radius: int) -> np.ndarray:
    """Patch minimum (clamped at the borders) of the per-pixel channel minimum."""
    if f.ndim != 3:
        raise ValueError("dark_channel needs an RGB frame")
    cmin = np.ascontiguousarray(f.min(axis=2), dtype=np.float64)
    return kernels.min_filter(cmin, int(patch_radius))


def estimate_atmospheric_light(f: np.ndarray, dark: np.ndarray, airlight_fraction: float) -> np.ndarray:
    """Mean RGB of the pixels in the top ``airlight_fraction`` of the dark channel."""
    if dark.shape != f.shape[:2]:
        raise ValueError("dark channel and frame dimensions differ")
    if not 0.0 < airlight_fraction <= 1.0:
        raise ValueError("airlight_fraction must lie in (0, 1]")
    flat = dark.ravel()
    count = max(1, int(np.ceil(airlight_fraction * flat.size)))
    # stable sort so ties resolve to raster order
    idx = np.argsort(-flat, kind="stable")[:count]
    return f.reshape(-1, 3)[idx].mean(axis=0)


def box_mean(img: np.ndarray, radius: int) -> np.ndarray:
    """Mean over the clamped ``(2r+1)^2`` window, via summed-area tables."""
    if radius <= 0:
        return img.copy()
    h, w = img.shape
    sat = np.zeros((h + 1, w + 1))
    sat[1:, 1:] = img.cumsum(axis=0).cumsum(axis=1)
    ys = np.arange(h)
    xs = np.arange(w)
    y0 = np.maximum(ys - radius, 0)[:, None]
    y1 = np.minimum(ys + radius + 1, h)[:, None]
    x0 = np.maximum(xs - radius, 0)[None, :]
    x1 = np.minimum(xs + radius + 1, w)[None, :]
    total = sat[y1, x1] - sat[y0, x1] - sat[y1, x0] + sat[y0, x0]
    return total / ((y1 - y0) * (x1 - x0))


def _normalize_by_airlight(f: np.ndarray, airlight: np.ndarray) -> np.ndarray:
    # a zero airlight channel is left unscaled
    safe = np.where(airlight > 0, airlight, 1.0)
    return f / safe


def estimate_transmission(f: np.ndarray, airlight: np.ndarray, params: DehazeParams) -> np.ndarray:
    t = 1.0 - params.omega * dark_channel(_normalize_by_airlight(f, airlight), params.patch_radius)
    if params.refine_radius > 0 and params.omega > 0:
        t = box_mean(t, params.refine_radius)
    return t


def recover_radiance(f: np.ndarray, t: np.ndarray, airlight: np.ndarray, t_floor: float) -> np.ndarray:
    """Invert ``I = J t + A (1 - t)`` with ``t`` floored, clamped to [0, 1]."""
    airlight = np.asarray(airlight, dtype=np.float64)
    te = np.maximum(t, t_floor)[..., None]
    j = (f - airlight) / te + airlight
    j = np.where(te == 1.0, f, j)
    j = np.where(airlight > 0, j, f)
    return np.clip(j, 0.0, 1.0)


def dehaze(f: np.ndarray, params: DehazeParams, *, return_estimates: bool = False):
    """Dark-channel-prior haze removal on an RGB frame.

    With ``return_estimates`` the transmission map and airlight are returned
    as well, as ``(J, t, A)``.
    """
    check_frame(f, channels=3)
    dark = dark_channel(f, params.patch_radius)
    airlight = estimate_atmospheric_light(f, dark, params.airlight_fraction)
    if params.omega == 0.0:
        t = np.ones(f.shape[:2])
        j = f.copy()
    else:
        t = estimate_transmission(f, airlight, params)
        j = recover_radiance(f, t, airlight, params.t_floor)
    if return_estimates:
        return j, t, airlight
    return j
