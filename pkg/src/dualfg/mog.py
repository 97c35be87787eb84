"""Per-pixel adaptive Gaussian mixture background model on luminance.

Components are stored in three ``(H, W, K)`` arrays (weight, mean,
variance) kept in descending ``w / sigma`` order. Each frame is classified
against the model *before* the model absorbs it.
"""
from __future__ import annotations

import struct
import warnings
from dataclasses import dataclass

import numpy as np

from . import kernels

__all__ = [
    "MogParams",
    "BackgroundModel",
    "init_model",
    "match_component",
    "update_and_classify",
    "background_luma",
    "dumps_model",
    "loads_model",
]

MAGIC = b"DFGMOG01"
# magic, height, width, K, then alpha, match_threshold, background_ratio,
# initial_variance, variance_floor; all little-endian
_HEADER = struct.Struct("<8sIII5d")


@dataclass(frozen=True)
class MogParams:
    k: int = 3
    alpha: float = 0.01
    match_threshold: float = 2.5  # lambda, in standard deviations
    background_ratio: float = 0.7  # T_bg
    initial_variance: float = (15.0 / 255.0) ** 2
    variance_floor: float = (2.0 / 255.0) ** 2

    def __post_init__(self):
        if not 1 <= self.k <= 10:
            raise ValueError(f"K must lie in [1, 10], got {self.k}")
        if not 3 <= self.k <= 5:
            warnings.warn(f"K={self.k} is outside the usual 3..5 range", stacklevel=3)
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if self.match_threshold <= 0:
            raise ValueError("match_threshold must be positive")
        if not 0.0 < self.background_ratio < 1.0:
            raise ValueError("background_ratio must lie in (0, 1)")
        if self.variance_floor <= 0 or self.initial_variance < self.variance_floor:
            raise ValueError("need 0 < variance_floor <= initial_variance")


@dataclass
class BackgroundModel:
    params: MogParams
    weight: np.ndarray
    mean: np.ndarray
    variance: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.weight.shape[:2]

    def copy(self) -> "BackgroundModel":
        return BackgroundModel(self.params, self.weight.copy(), self.mean.copy(), self.variance.copy())


def init_model(width: int, height: int, first_luma: np.ndarray, params: MogParams | None = None) -> BackgroundModel:
    params = params or MogParams()
    first_luma = np.asarray(first_luma, dtype=np.float64)
    if first_luma.shape != (height, width):
        raise ValueError(f"first frame {first_luma.shape} does not match {height}x{width}")
    k = params.k
    weight = np.zeros((height, width, k))
    mean = np.zeros((height, width, k))
    variance = np.full((height, width, k), params.initial_variance)
    weight[..., 0] = 1.0
    mean[..., 0] = first_luma
    return BackgroundModel(params, weight, mean, variance)


def match_component(weights, means, variances, x: float, match_threshold: float = 2.5) -> int | None:
    """Index of the first component (in stored order) within lambda*sigma of ``x``."""
    for j, (w, m, v) in enumerate(zip(weights, means, variances)):
        if w > 0.0 and abs(x - m) <= match_threshold * np.sqrt(v):
            return j
    return None


def update_and_classify(model: BackgroundModel, frame_luma: np.ndarray) -> np.ndarray:
    """Return the moving-pixel mask for ``frame_luma`` and absorb the frame."""
    x = np.ascontiguousarray(frame_luma, dtype=np.float64)
    if x.shape != model.shape:
        raise ValueError(f"frame {x.shape} does not match model {model.shape}")
    p = model.params
    return kernels.mog_update(
        model.weight, model.mean, model.variance, x,
        p.alpha, p.match_threshold, p.background_ratio, p.initial_variance, p.variance_floor,
    )


def background_luma(model: BackgroundModel) -> np.ndarray:
    """Mean of the highest-fitness component at every pixel."""
    return np.clip(model.mean[..., 0], 0.0, 1.0)


def dumps_model(model: BackgroundModel) -> bytes:
    """Serialize to the binary snapshot layout.

    Header (``<8sIII5d``): magic ``DFGMOG01``, height, width, K, alpha,
    match_threshold, background_ratio, initial_variance, variance_floor.
    Body: for each pixel in row-major order, K triples
    ``(weight, mean, variance)`` as little-endian float64.
    """
    p = model.params
    h, w = model.shape
    header = _HEADER.pack(MAGIC, h, w, p.k, p.alpha, p.match_threshold,
                          p.background_ratio, p.initial_variance, p.variance_floor)
    body = np.stack([model.weight, model.mean, model.variance], axis=-1).astype("<f8")
    return header + body.tobytes()


def loads_model(data: bytes) -> BackgroundModel:
    if len(data) < _HEADER.size:
        raise ValueError("snapshot too short")
    magic, h, w, k, alpha, lam, t_bg, var0, floor = _HEADER.unpack_from(data)
    if magic != MAGIC:
        raise ValueError(f"bad snapshot magic {magic!r}")
    expected = _HEADER.size + h * w * k * 3 * 8
    if len(data) != expected:
        raise ValueError(f"snapshot size {len(data)} != expected {expected}")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        params = MogParams(k=k, alpha=alpha, match_threshold=lam, background_ratio=t_bg,
                           initial_variance=var0, variance_floor=floor)
    body = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(h, w, k, 3)
    return BackgroundModel(
        params,
        np.ascontiguousarray(body[..., 0], dtype=np.float64),
        np.ascontiguousarray(body[..., 1], dtype=np.float64),
        np.ascontiguousarray(body[..., 2], dtype=np.float64),
    )
