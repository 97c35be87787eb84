"""Dual-foreground fusion and post-processing.

Moving pixels are removed from the difference mask, the result is opened
(erode with a small ellipse, dilate with a larger one) and the largest
8-connected component is returned with its convex hull.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .imgcore import check_mask

__all__ = [
    "StructuringElement",
    "Component",
    "Detection",
    "PostParams",
    "ellipse",
    "subtract_masks",
    "erode",
    "dilate",
    "connected_components",
    "largest_component",
    "convex_hull",
    "detect",
    "detect_all",
]


@dataclass(frozen=True)
class StructuringElement:
    size: int
    bits: np.ndarray = field(repr=False, compare=False)
    shape: str = "ELLIPSE"


def ellipse(size: int) -> StructuringElement:
    """Discrete filled ellipse inscribed in a ``size x size`` square.

    Row ``i`` spans ``c +- round(c * sqrt(1 - (i - c)^2 / c^2))`` with
    ``c = size // 2``, which gives a cross for 3 and a 17-pixel disc for 5.
    """
    if size < 1 or size % 2 == 0:
        raise ValueError(f"structuring element size must be odd and >= 1, got {size}")
    c = size // 2
    bits = np.zeros((size, size), dtype=bool)
    for i in range(size):
        dy = i - c
        dx = int(np.floor(c * np.sqrt(max(0.0, 1.0 - (dy * dy) / (c * c))) + 0.5)) if c else 0
        bits[i, c - dx:c + dx + 1] = True
    bits.setflags(write=False)
    return StructuringElement(size, bits)


@dataclass
class Component:
    label: int
    area: int
    bbox: tuple[int, int, int, int]  # x, y, width, height
    centroid: tuple[float, float]  # x, y
    pixels: np.ndarray = field(repr=False)  # (area, 2) of (x, y), raster order

    def summary(self) -> dict:
        return {"label": self.label, "area": self.area, "bbox": list(self.bbox),
                "centroid": list(self.centroid)}


@dataclass
class Detection:
    component: Component
    hull: list[tuple[int, int]]
    frame_index: int = -1

    def mask(self, shape: tuple[int, int]) -> np.ndarray:
        m = np.zeros(shape, dtype=bool)
        px = self.component.pixels
        m[px[:, 1], px[:, 0]] = True
        return m


@dataclass(frozen=True)
class PostParams:
    erode_size: int = 3
    dilate_size: int = 5
    min_area: int = 450

    def __post_init__(self):
        for s in (self.erode_size, self.dilate_size):
            if s < 1 or s % 2 == 0:
                raise ValueError(f"structuring element sizes must be odd and >= 1, got {s}")
        if self.min_area < 0:
            raise ValueError("min_area must be >= 0")

    @staticmethod
    def for_roi(width: int, height: int, **kw) -> "PostParams":
        # 0.5% of the ROI area
        return PostParams(min_area=int(round(0.005 * width * height)), **kw)


def subtract_masks(dfg: np.ndarray, bsfg: np.ndarray) -> np.ndarray:
    check_mask(dfg)
    check_mask(bsfg, dfg.shape)
    return dfg & ~bsfg


def _bits(se) -> np.ndarray:
    return se.bits if isinstance(se, StructuringElement) else np.asarray(se, dtype=bool)


def erode(m: np.ndarray, se: StructuringElement) -> np.ndarray:
    check_mask(m)
    return kernels.erode(np.ascontiguousarray(m), np.ascontiguousarray(_bits(se)))


def dilate(m: np.ndarray, se: StructuringElement) -> np.ndarray:
    check_mask(m)
    return kernels.dilate(np.ascontiguousarray(m), np.ascontiguousarray(_bits(se)))


def connected_components(m: np.ndarray, connectivity: int = 8) -> list[Component]:
    """8-connected components, labelled in raster order of their first pixel."""
    if connectivity != 8:
        raise ValueError("only 8-connectivity is supported")
    check_mask(m)
    labels, count = kernels.label8(np.ascontiguousarray(m))
    if count == 0:
        return []
    ys, xs = np.nonzero(labels)
    lab = labels[ys, xs]
    order = np.argsort(lab, kind="stable")
    ys, xs, lab = ys[order], xs[order], lab[order]
    bounds = np.searchsorted(lab, np.arange(1, count + 2))
    starts = bounds[:-1]
    area = np.diff(bounds)
    x0 = np.minimum.reduceat(xs, starts)
    x1 = np.maximum.reduceat(xs, starts)
    y0 = np.minimum.reduceat(ys, starts)
    y1 = np.maximum.reduceat(ys, starts)
    cx = np.add.reduceat(xs.astype(np.float64), starts) / area
    cy = np.add.reduceat(ys.astype(np.float64), starts) / area
    pixels = np.stack([xs, ys], axis=1).astype(np.int64)
    return [
        Component(
            label=i + 1,
            area=int(area[i]),
            bbox=(int(x0[i]), int(y0[i]), int(x1[i] - x0[i] + 1), int(y1[i] - y0[i] + 1)),
            centroid=(float(cx[i]), float(cy[i])),
            pixels=pixels[bounds[i]:bounds[i + 1]],
        )
        for i in range(count)
    ]


def largest_component(cs: list[Component], min_area: int = 0) -> Component | None:
    best = None
    for c in cs:
        if c.area >= min_area and (best is None or c.area > best.area):
            best = c
    return best


def _cross(o, a, b) -> int:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def convex_hull(points) -> list[tuple[int, int]]:
    """Counter-clockwise hull (monotone chain); collinear points are dropped.

    Orientation is in plain (x, y) axes, so on a y-down image the polygon
    reads clockwise.
    """
    pts = sorted({(int(p[0]), int(p[1])) for p in points})
    if not pts:
        raise ValueError("convex hull of an empty point set")
    if len(pts) <= 2:
        return pts
    lower: list[tuple[int, int]] = []
    for p in pts:
        while len(lower) >= 2 and _cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[tuple[int, int]] = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = lower[:-1] + upper[:-1]
    if len(hull) == 2 and hull[0] == hull[1]:
        return hull[:1]
    return hull


def _hull_points(c: Component) -> np.ndarray:
    # only the row extremes can be hull vertices
    px = c.pixels
    ys = px[:, 1]
    order = np.lexsort((px[:, 0], ys))
    px = px[order]
    ys = px[:, 1]
    starts = np.flatnonzero(np.r_[True, ys[1:] != ys[:-1]])
    ends = np.r_[starts[1:], len(px)] - 1
    return np.concatenate([px[starts], px[ends]])


def detect_all(dfg: np.ndarray, bsfg: np.ndarray, post: PostParams, frame_index: int = -1):
    """Run the post-processing chain; returns ``(fused, cleaned, components, detection)``."""
    fused = subtract_masks(dfg, bsfg)
    cleaned = dilate(erode(fused, ellipse(post.erode_size)), ellipse(post.dilate_size))
    comps = connected_components(cleaned)
    best = largest_component(comps, post.min_area)
    det = None
    if best is not None:
        det = Detection(best, convex_hull(_hull_points(best)), frame_index)
    return fused, cleaned, comps, det


def detect(dfg: np.ndarray, bsfg: np.ndarray, post: PostParams | None = None,
           frame_index: int = -1) -> Detection | None:
    return detect_all(dfg, bsfg, post or PostParams(), frame_index)[3]
