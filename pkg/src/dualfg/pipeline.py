"""Frame-by-frame orchestration of the dual-foreground detector.

Per frame: crop ROI -> equalize -> dehaze -> Lab L -> (difference mask,
MOG moving mask) -> subtract -> open -> largest component + hull. Frame 0
seeds both the fixed reference and the MOG model.
"""
from __future__ import annotations

import json
import logging
import time
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from . import framediff, fusion, mog, preprocess
from .config import PipelineConfig
from .imgcore import check_mask, global_mean, to_luma
from .io import load_sequence, write_frame, write_mask

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1

__all__ = [
    "SCHEMA_VERSION",
    "FrameReport",
    "FrameResult",
    "Pipeline",
    "run_pipeline",
    "compute_iou",
    "render_overlay",
    "rasterize_polyline",
    "write_report",
    "read_report",
    "strip_timings",
]


@dataclass
class FrameReport:
    index: int
    detection: dict | None
    popcounts: dict
    threshold: float
    timings_ms: dict = field(default_factory=dict)
    components: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "index": self.index,
            "detection": self.detection,
            "popcounts": dict(self.popcounts),
            "threshold": self.threshold,
            "timings_ms": dict(self.timings_ms),
            "components": list(self.components),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FrameReport":
        return cls(
            index=d["index"],
            detection=d["detection"],
            popcounts=d["popcounts"],
            threshold=d["threshold"],
            timings_ms=d.get("timings_ms", {}),
            components=d.get("components", []),
        )


@dataclass
class FrameResult:
    report: FrameReport
    frame: np.ndarray  # preprocessed ROI frame
    dfg: np.ndarray
    bsfg: np.ndarray
    fused: np.ndarray
    cleaned: np.ndarray
    detection: fusion.Detection | None

    def detection_mask(self) -> np.ndarray:
        if self.detection is None:
            return np.zeros_like(self.dfg)
        return self.detection.mask(self.dfg.shape)


def _detection_dict(d: fusion.Detection | None) -> dict | None:
    if d is None:
        return None
    c = d.component
    return {
        "label": c.label,
        "area": c.area,
        "bbox": list(c.bbox),
        "centroid": list(c.centroid),
        "hull": [list(v) for v in d.hull],
    }


class Pipeline:
    """Stateful per-sequence detector; feed frames in order with :meth:`step`."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.reference = framediff.ReferenceFrame()
        self.model: mog.BackgroundModel | None = None
        self.frozen_threshold: float | None = None
        self.shape: tuple[int, int] | None = None
        self.post: fusion.PostParams | None = None
        self.index = 0
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            self._mog_params = cfg.mog.params()
        self._eq = cfg.equalization.params()
        self._dh = cfg.dehaze.params()

    def preprocess(self, frame: np.ndarray) -> np.ndarray:
        f = frame
        if self.cfg.roi is not None:
            f = preprocess.crop_roi(f, self.cfg.roi)
        if self.cfg.equalization.enabled:
            f = preprocess.illumination_equalize(f, self._eq)
        if self.cfg.dehaze.enabled:
            f = preprocess.dehaze(f, self._dh)
        return f

    def step(self, frame: np.ndarray) -> FrameResult:
        i = self.index
        timings = {}
        t0 = time.perf_counter()
        shape = frame.shape[:2]
        if self.shape is None:
            self.shape = shape
        elif shape != self.shape:
            raise ValueError(f"frame {i}: size {shape[1]}x{shape[0]} differs from first frame "
                             f"{self.shape[1]}x{self.shape[0]}")
        f = self.preprocess(frame)
        luma = to_luma(f)
        t1 = time.perf_counter()
        timings["preprocess"] = (t1 - t0) * 1e3

        if not self.reference.is_set:
            self.reference.set(luma)
            h, w = luma.shape
            self.model = mog.init_model(w, h, luma, self._mog_params)
            self.post = self.cfg.post.params(w, h)
            diff = np.zeros_like(luma)
            thr = 0.0
            dfg = np.zeros(luma.shape, dtype=bool)
            bsfg = np.zeros(luma.shape, dtype=bool)
            t2 = t3 = time.perf_counter()
        else:
            diff = framediff.frame_difference(luma, self.reference)
            if self.frozen_threshold is not None:
                thr = self.frozen_threshold
            else:
                thr = global_mean(diff)
                if self.cfg.threshold.mode == "frozen" and i >= self.cfg.threshold.freeze_frame:
                    self.frozen_threshold = thr
            dfg = framediff.threshold_at(diff, thr)
            t2 = time.perf_counter()
            bsfg = mog.update_and_classify(self.model, luma)
            t3 = time.perf_counter()
        timings["framediff"] = (t2 - t1) * 1e3
        timings["mog"] = (t3 - t2) * 1e3

        fused, cleaned, comps, det = fusion.detect_all(dfg, bsfg, self.post, i)
        t4 = time.perf_counter()
        timings["post"] = (t4 - t3) * 1e3
        timings["total"] = (t4 - t0) * 1e3

        report = FrameReport(
            index=i,
            detection=_detection_dict(det),
            popcounts={"dfg": int(dfg.sum()), "bsfg": int(bsfg.sum()), "fused": int(fused.sum())},
            threshold=float(thr),
            timings_ms={k: round(v, 3) for k, v in timings.items()},
            components=[c.summary() for c in comps],
        )
        self.index += 1
        return FrameResult(report, f, dfg, bsfg, fused, cleaned, det)


def compute_iou(a: np.ndarray, b: np.ndarray) -> float:
    """|a & b| / |a | b|, and 1.0 when both masks are empty."""
    check_mask(a)
    check_mask(b, a.shape)
    union = int(np.count_nonzero(a | b))
    if union == 0:
        return 1.0
    return int(np.count_nonzero(a & b)) / union


def rasterize_polyline(vertices, closed: bool = True) -> list[tuple[int, int]]:
    """Integer (x, y) pixels on the Bresenham segments joining ``vertices``."""
    vs = [(int(x), int(y)) for x, y in vertices]
    if not vs:
        return []
    if len(vs) == 1:
        return vs
    pairs = list(zip(vs, vs[1:]))
    if closed and len(vs) > 2:
        pairs.append((vs[-1], vs[0]))
    out: list[tuple[int, int]] = []
    for (x0, y0), (x1, y1) in pairs:
        dx, dy = abs(x1 - x0), -abs(y1 - y0)
        sx = 1 if x0 < x1 else -1
        sy = 1 if y0 < y1 else -1
        err = dx + dy
        while True:
            out.append((x0, y0))
            if x0 == x1 and y0 == y1:
                break
            e2 = 2 * err
            if e2 >= dy:
                err += dy
                x0 += sx
            if e2 <= dx:
                err += dx
                y0 += sy
    return out


def render_overlay(f: np.ndarray, d: fusion.Detection | dict | None, offset=(0, 0)) -> np.ndarray:
    """Copy of ``f`` with the detection hull drawn in pure green.

    ``offset`` shifts hull coordinates (e.g. by the ROI origin).
    """
    out = np.array(f, dtype=np.float64, copy=True)
    if d is None:
        return out
    if out.ndim == 2:
        out = np.repeat(out[..., None], 3, axis=2)
    hull = d.hull if isinstance(d, fusion.Detection) else d["hull"]
    ox, oy = offset
    h, w = out.shape[:2]
    for x, y in rasterize_polyline([(x + ox, y + oy) for x, y in hull]):
        if 0 <= x < w and 0 <= y < h:
            out[y, x] = (0.0, 1.0, 0.0)
    return out


def write_report(path, cfg_echo: dict, reports: list[FrameReport], extra: dict | None = None) -> None:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "config": cfg_echo,
        "frames": [r.to_dict() for r in reports],
    }
    if extra:
        doc.update(extra)
    Path(path).write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def read_report(path) -> tuple[dict, list[FrameReport]]:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported report schema_version {doc.get('schema_version')!r}")
    return doc["config"], [FrameReport.from_dict(f) for f in doc["frames"]]


def strip_timings(doc: dict) -> dict:
    """Report document without the per-frame timing fields."""
    doc = json.loads(json.dumps(doc))
    for f in doc.get("frames", []):
        f.pop("timings_ms", None)
    doc.pop("elapsed_s", None)
    return doc


def run_pipeline(cfg: PipelineConfig, frames: Iterable[np.ndarray] | None = None,
                 *, keep_results: bool = False):
    """Run the detector over a sequence; returns the list of frame reports.

    Without ``frames`` the sequence is read from ``cfg.input``. Outputs are
    written under ``cfg.output.directory`` according to the emit flags.
    With ``keep_results`` a ``(reports, results)`` pair is returned instead.
    """
    if frames is None:
        seq = load_sequence(cfg.input_dir, cfg.input.pattern, allow_gaps=cfg.input.allow_gaps)
        frames = _checked_frames(seq)
    out_dir = cfg.output_dir
    emit_any = cfg.output.emit_masks or cfg.output.emit_overlays or cfg.output.emit_report
    if emit_any:
        out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.output.emit_masks:
        (out_dir / "masks").mkdir(exist_ok=True)
    if cfg.output.emit_overlays:
        (out_dir / "overlays").mkdir(exist_ok=True)

    pipe = Pipeline(cfg)
    reports: list[FrameReport] = []
    results: list[FrameResult] = []
    start = time.perf_counter()
    n = 0
    for frame in frames:
        res = pipe.step(frame)
        i = res.report.index
        reports.append(res.report)
        if keep_results:
            results.append(res)
        if cfg.output.emit_masks:
            m = out_dir / "masks"
            write_mask(m / f"dfg_{i:05d}.png", res.dfg)
            write_mask(m / f"bsfg_{i:05d}.png", res.bsfg)
            write_mask(m / f"fused_{i:05d}.png", res.fused)
            write_mask(m / f"detection_{i:05d}.png", res.detection_mask())
        if cfg.output.emit_overlays:
            off = (cfg.roi.x, cfg.roi.y) if cfg.roi is not None else (0, 0)
            write_frame(out_dir / "overlays" / f"overlay_{i:05d}.png",
                        render_overlay(frame, res.detection, off))
        n += 1
    if n == 0:
        raise ValueError("no frames to process")
    elapsed = time.perf_counter() - start
    log.info("processed %d frames in %.2f s", n, elapsed)
    if cfg.output.emit_report:
        write_report(out_dir / "report.json", cfg.to_dict(), reports,
                     extra={"elapsed_s": round(elapsed, 3)})
    return (reports, results) if keep_results else reports


def _checked_frames(seq):
    for k, path in enumerate(seq.paths):
        try:
            yield seq[k]
        except Exception as exc:  # noqa: BLE001 - surface the index with any decoder failure
            raise ValueError(f"frame {seq.indices[k]} ({path}): cannot read: {exc}") from exc
