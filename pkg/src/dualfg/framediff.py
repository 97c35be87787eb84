"""Differencing against a fixed reference frame, with mean thresholding."""
from __future__ import annotations

import numpy as np

from .imgcore import global_mean, to_luma

__all__ = ["ReferenceFrame", "set_reference", "frame_difference", "threshold_mask", "threshold_at"]


class ReferenceFrame:
    """Write-once holder for the luminance of the empty-scene frame."""

    def __init__(self) -> None:
        self._luma: np.ndarray | None = None

    @property
    def is_set(self) -> bool:
        return self._luma is not None

    @property
    def luma(self) -> np.ndarray:
        if self._luma is None:
            raise RuntimeError("reference frame has not been set")
        return self._luma

    def set(self, f: np.ndarray) -> "ReferenceFrame":
        if self._luma is not None:
            raise RuntimeError("reference frame is fixed once set; it cannot be replaced")
        luma = to_luma(np.asarray(f, dtype=np.float64)).copy()
        luma.setflags(write=False)
        self._luma = luma
        return self


def set_reference(f: np.ndarray, ref: ReferenceFrame | None = None) -> ReferenceFrame:
    """Store the Lab L channel of ``f`` as the reference.

    Passing an already-set ``ref`` raises, since the reference never changes.
    """
    return (ref if ref is not None else ReferenceFrame()).set(f)


def frame_difference(cf: np.ndarray, ref: ReferenceFrame | np.ndarray) -> np.ndarray:
    """Per-pixel ``|L(cf) - L(ref)|``. 2-D inputs are taken as luma."""
    ref_luma = ref.luma if isinstance(ref, ReferenceFrame) else to_luma(np.asarray(ref, dtype=np.float64))
    cur = to_luma(np.asarray(cf, dtype=np.float64))
    if cur.shape != ref_luma.shape:
        raise ValueError(f"frame {cur.shape} and reference {ref_luma.shape} dimensions differ")
    return np.abs(cur - ref_luma)


def threshold_at(diff: np.ndarray, t: float) -> np.ndarray:
    return np.asarray(diff) > t


def threshold_mask(diff: np.ndarray) -> np.ndarray:
    """Foreground where the difference strictly exceeds its own global mean."""
    return threshold_at(diff, global_mean(diff))
