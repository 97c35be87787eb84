"""Pipeline configuration with strict key checking.

Config files are YAML (JSON is accepted too, being a YAML subset)::

    input:        {directory, pattern, allow_gaps}
    roi:          null | {x, y, width, height}
    equalization: {enabled, p, q}
    dehaze:       {enabled, patch_radius, omega, t_floor, airlight_fraction, refine_radius}
    mog:          {k, alpha, match_threshold, background_ratio, initial_variance, variance_floor}
    threshold:    {mode: per-frame | frozen, freeze_frame}
    post:         {erode_size, dilate_size, min_area}
    output:       {directory, emit_masks, emit_overlays, emit_report}

Relative paths resolve against the config file's directory. ``min_area:
null`` means 0.5% of the ROI area.
"""
from __future__ import annotations

import warnings
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import yaml

from .fusion import PostParams
from .mog import MogParams
from .preprocess import DehazeParams, EqualizationParams, Roi

__all__ = [
    "InputConfig",
    "EqualizationConfig",
    "DehazeConfig",
    "ThresholdConfig",
    "PostConfig",
    "OutputConfig",
    "PipelineConfig",
    "load_config",
]


def _take(cls, d, where: str):
    if d is None:
        return cls()
    if not isinstance(d, dict):
        raise ValueError(f"{where}: expected a mapping, got {type(d).__name__}")
    allowed = {f.name for f in fields(cls)}
    unknown = set(d) - allowed
    if unknown:
        raise ValueError(f"{where}: unknown key(s) {sorted(unknown)}; allowed {sorted(allowed)}")
    return cls(**d)


@dataclass(frozen=True)
class InputConfig:
    directory: str = "frames"
    pattern: str = "frame_%05d.png"
    allow_gaps: bool = False


@dataclass(frozen=True)
class EqualizationConfig:
    enabled: bool = True
    p: int = 7
    q: int = 7

    def params(self) -> EqualizationParams:
        return EqualizationParams(self.p, self.q)


@dataclass(frozen=True)
class DehazeConfig:
    enabled: bool = True
    patch_radius: int = 7
    omega: float = 0.95
    t_floor: float = 0.1
    airlight_fraction: float = 0.001
    refine_radius: int = 7

    def params(self) -> DehazeParams:
        d = asdict(self)
        d.pop("enabled")
        return DehazeParams(**d)


@dataclass(frozen=True)
class MogConfig:
    k: int = 3
    alpha: float = 0.01
    match_threshold: float = 2.5
    background_ratio: float = 0.7
    initial_variance: float = (15.0 / 255.0) ** 2
    variance_floor: float = (2.0 / 255.0) ** 2

    def params(self) -> MogParams:
        return MogParams(**asdict(self))


@dataclass(frozen=True)
class ThresholdConfig:
    mode: str = "per-frame"
    freeze_frame: int = 1  # frame whose difference image fixes T in frozen mode

    def __post_init__(self):
        if self.mode not in ("per-frame", "frozen"):
            raise ValueError(f"threshold.mode must be 'per-frame' or 'frozen', got {self.mode!r}")
        if self.freeze_frame < 1:
            raise ValueError("threshold.freeze_frame must be >= 1 (frame 0 is the reference)")


@dataclass(frozen=True)
class PostConfig:
    erode_size: int = 3
    dilate_size: int = 5
    min_area: int | None = None

    def params(self, roi_width: int, roi_height: int) -> PostParams:
        if self.min_area is None:
            return PostParams.for_roi(roi_width, roi_height, erode_size=self.erode_size,
                                      dilate_size=self.dilate_size)
        return PostParams(self.erode_size, self.dilate_size, self.min_area)


@dataclass(frozen=True)
class OutputConfig:
    directory: str = "out"
    emit_masks: bool = False
    emit_overlays: bool = False
    emit_report: bool = True


@dataclass(frozen=True)
class PipelineConfig:
    input: InputConfig = field(default_factory=InputConfig)
    roi: Roi | None = None
    equalization: EqualizationConfig = field(default_factory=EqualizationConfig)
    dehaze: DehazeConfig = field(default_factory=DehazeConfig)
    mog: MogConfig = field(default_factory=MogConfig)
    threshold: ThresholdConfig = field(default_factory=ThresholdConfig)
    post: PostConfig = field(default_factory=PostConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    base_dir: str = field(default=".", compare=False)

    _SECTIONS = ("input", "roi", "equalization", "dehaze", "mog", "threshold", "post", "output")

    @classmethod
    def from_dict(cls, d: dict | None, base_dir: str | Path = ".") -> "PipelineConfig":
        d = d or {}
        if not isinstance(d, dict):
            raise ValueError("config: top level must be a mapping")
        unknown = set(d) - set(cls._SECTIONS)
        if unknown:
            raise ValueError(f"config: unknown section(s) {sorted(unknown)}; allowed {list(cls._SECTIONS)}")
        roi = d.get("roi")
        cfg = cls(
            input=_take(InputConfig, d.get("input"), "input"),
            roi=None if roi is None else _take(Roi, roi, "roi"),
            equalization=_take(EqualizationConfig, d.get("equalization"), "equalization"),
            dehaze=_take(DehazeConfig, d.get("dehaze"), "dehaze"),
            mog=_take(MogConfig, d.get("mog"), "mog"),
            threshold=_take(ThresholdConfig, d.get("threshold"), "threshold"),
            post=_take(PostConfig, d.get("post"), "post"),
            output=_take(OutputConfig, d.get("output"), "output"),
            base_dir=str(base_dir),
        )
        cfg.validate_params()
        return cfg

    def to_dict(self) -> dict:
        d = {name: (None if getattr(self, name) is None else asdict(getattr(self, name)))
             for name in self._SECTIONS}
        return d

    def validate_params(self) -> None:
        self.equalization.params()
        self.dehaze.params()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            self.mog.params()
        if self.post.min_area is not None:
            PostParams(self.post.erode_size, self.post.dilate_size, self.post.min_area)
        else:
            PostParams(self.post.erode_size, self.post.dilate_size)

    def resolve(self, p: str) -> Path:
        path = Path(p)
        return path if path.is_absolute() else Path(self.base_dir) / path

    @property
    def input_dir(self) -> Path:
        return self.resolve(self.input.directory)

    @property
    def output_dir(self) -> Path:
        return self.resolve(self.output.directory)

    def with_overrides(self, **sections) -> "PipelineConfig":
        return replace(self, **sections)


def load_config(path) -> PipelineConfig:
    path = Path(path)
    with open(path) as fh:
        data = yaml.safe_load(fh)
    return PipelineConfig.from_dict(data, base_dir=path.parent)
