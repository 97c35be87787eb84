"""Deterministic synthetic frame sequences with ground-truth object masks.

A textured object enters a textured background, travels along a polyline
and (optionally) stops. Illumination gradient, haze, water-droplet bursts
and sensor noise are applied after compositing, each from its onset frame.
Every random draw comes from a stream keyed by ``(seed, purpose, frame)``,
so any frame can be produced on its own and reruns are bit-identical.

Scenario keys (YAML or JSON; unknown keys are rejected)::

    width, height, frames, seed
    background: {kind: uniform|gradient|speckle, level, jitter, dark_fraction,
                 dark_level, start, end, direction, panels: [{x, y, width, height, level}]}
    object: null | {shape: rectangle|ellipse|polygon, width, height, vertices,
                    intensity, jitter, dark_fraction, entry_frame, stop_frame,
                    path: [[x, y], ...], speed}
    degradation: {noise_sigma,
                  gradient: null | {direction, strength, onset},
                  haze: null | {t, airlight: [r, g, b], onset},
                  droplets: null | {count, radius, intensity, onset, every}}

``path`` holds top-left positions of the object's bounding box. With a
``stop_frame`` the object covers the whole path between ``entry_frame`` and
``stop_frame`` and rests at the last point afterwards. With
``stop_frame: null`` it moves at ``speed`` pixels per frame, back and forth
along the path, for the rest of the sequence.
"""
from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .imgcore import hsv_to_rgb, rgb_to_hsv

__all__ = [
    "Panel",
    "BackgroundSpec",
    "ObjectSpec",
    "GradientSpec",
    "HazeSpec",
    "DropletSpec",
    "DegradationSpec",
    "Scenario",
    "GroundTruth",
    "SyntheticSequence",
    "generate",
    "apply_haze",
    "apply_illumination_gradient",
    "apply_noise",
    "load_scenario",
    "write_sequence",
]

_STREAM_BACKGROUND = 0
_STREAM_OBJECT = 1
_STREAM_NOISE = 2
_STREAM_DROPLETS = 3


def _strict(d: dict | None, cls, where: str) -> dict:
    if d is None:
        return {}
    if not isinstance(d, dict):
        raise ValueError(f"{where}: expected a mapping, got {type(d).__name__}")
    allowed = set(cls.__dataclass_fields__)
    unknown = set(d) - allowed
    if unknown:
        raise ValueError(f"{where}: unknown key(s) {sorted(unknown)}; allowed {sorted(allowed)}")
    return dict(d)


# ---------------------------------------------------------------------------
# degradations

def apply_haze(f: np.ndarray, t, airlight) -> np.ndarray:
    """``I = J t + A (1 - t)`` per channel; ``t`` is a scalar or (H, W) map."""
    t = np.asarray(t, dtype=np.float64)
    if np.any(t < 0.0) or np.any(t > 1.0):
        raise ValueError("transmission must lie in [0, 1]")
    a = np.broadcast_to(np.asarray(airlight, dtype=np.float64), (3,))
    if t.ndim == 2:
        t = t[..., None]
    return f * t + a * (1.0 - t)


def _ramp(h: int, w: int, direction: str, strength: float) -> np.ndarray:
    u = np.linspace(0.0, 1.0, w) - 0.5 if w > 1 else np.zeros(w)
    v = np.linspace(0.0, 1.0, h) - 0.5 if h > 1 else np.zeros(h)
    if direction == "horizontal":
        return strength * np.broadcast_to(u[None, :], (h, w))
    if direction == "vertical":
        return strength * np.broadcast_to(v[:, None], (h, w))
    if direction == "diagonal":
        return strength * (u[None, :] + v[:, None])
    raise ValueError(f"unknown gradient direction {direction!r}")


def apply_illumination_gradient(f: np.ndarray, direction: str, strength: float) -> np.ndarray:
    """Add a zero-mean linear ramp (peak-to-peak ``strength``) to HSV value.

    ``diagonal`` is the sum of the horizontal and vertical ramps.
    """
    if strength == 0:
        return f.copy()
    hsv = rgb_to_hsv(f)
    hsv[..., 2] = np.clip(hsv[..., 2] + _ramp(f.shape[0], f.shape[1], direction, strength), 0.0, 1.0)
    return np.clip(hsv_to_rgb(hsv), 0.0, 1.0)


def apply_noise(f: np.ndarray, sigma: float, seed) -> np.ndarray:
    if sigma < 0:
        raise ValueError("noise sigma must be >= 0")
    if sigma == 0:
        return f.copy()
    rng = np.random.default_rng(seed)
    return np.clip(f + rng.normal(0.0, sigma, size=f.shape), 0.0, 1.0)


# ---------------------------------------------------------------------------
# scenario

@dataclass(frozen=True)
class Panel:
    x: int
    y: int
    width: int
    height: int
    level: float = 1.0


@dataclass(frozen=True)
class BackgroundSpec:
    kind: str = "uniform"
    level: float = 0.4
    jitter: float = 0.0
    dark_fraction: float = 0.0
    dark_level: float = 0.0
    start: float = 0.2
    end: float = 0.6
    direction: str = "horizontal"
    panels: tuple[Panel, ...] = ()

    @classmethod
    def from_dict(cls, d) -> "BackgroundSpec":
        d = _strict(d, cls, "background")
        d["panels"] = tuple(Panel(**_strict(p, Panel, "background.panels[]")) for p in d.get("panels") or ())
        spec = cls(**d)
        if spec.kind not in ("uniform", "gradient", "speckle"):
            raise ValueError(f"background.kind must be uniform, gradient or speckle, got {spec.kind!r}")
        return spec


@dataclass(frozen=True)
class ObjectSpec:
    shape: str = "rectangle"
    width: int = 40
    height: int = 40
    vertices: tuple[tuple[float, float], ...] = ()
    intensity: float = 0.8
    jitter: float = 0.0
    dark_fraction: float = 0.0
    entry_frame: int = 0
    stop_frame: int | None = 0
    path: tuple[tuple[int, int], ...] = ((0, 0),)
    speed: float = 2.0

    @classmethod
    def from_dict(cls, d) -> "ObjectSpec":
        d = _strict(d, cls, "object")
        if "path" in d:
            d["path"] = tuple((int(p[0]), int(p[1])) for p in d["path"])
        if "vertices" in d:
            d["vertices"] = tuple((float(p[0]), float(p[1])) for p in d["vertices"])
        spec = cls(**d)
        if spec.shape not in ("rectangle", "ellipse", "polygon"):
            raise ValueError(f"object.shape must be rectangle, ellipse or polygon, got {spec.shape!r}")
        if spec.shape == "polygon" and len(spec.vertices) < 3:
            raise ValueError("polygon object needs at least 3 vertices")
        if not spec.path:
            raise ValueError("object.path needs at least one point")
        return spec


@dataclass(frozen=True)
class GradientSpec:
    direction: str = "horizontal"
    strength: float = 0.3
    onset: int = 0


@dataclass(frozen=True)
class HazeSpec:
    t: float = 0.6
    airlight: tuple[float, float, float] = (0.9, 0.9, 0.9)
    onset: int = 0


@dataclass(frozen=True)
class DropletSpec:
    count: int = 20
    radius: int = 2
    intensity: float = 1.0
    onset: int = 0
    every: int = 1


@dataclass(frozen=True)
class DegradationSpec:
    noise_sigma: float = 0.0
    gradient: GradientSpec | None = None
    haze: HazeSpec | None = None
    droplets: DropletSpec | None = None

    @classmethod
    def from_dict(cls, d) -> "DegradationSpec":
        d = _strict(d, cls, "degradation")
        if d.get("gradient") is not None:
            d["gradient"] = GradientSpec(**_strict(d["gradient"], GradientSpec, "degradation.gradient"))
        if d.get("haze") is not None:
            h = _strict(d["haze"], HazeSpec, "degradation.haze")
            if "airlight" in h:
                a = h["airlight"]
                h["airlight"] = tuple(float(v) for v in (a if isinstance(a, (list, tuple)) else (a, a, a)))
            d["haze"] = HazeSpec(**h)
        if d.get("droplets") is not None:
            d["droplets"] = DropletSpec(**_strict(d["droplets"], DropletSpec, "degradation.droplets"))
        return cls(**d)


@dataclass(frozen=True)
class Scenario:
    width: int = 300
    height: int = 300
    frames: int = 200
    seed: int = 0
    background: BackgroundSpec = field(default_factory=BackgroundSpec)
    object: ObjectSpec | None = None
    degradation: DegradationSpec = field(default_factory=DegradationSpec)

    def __post_init__(self):
        self.validate()

    @classmethod
    def from_dict(cls, d: dict) -> "Scenario":
        d = _strict(d, cls, "scenario")
        if "background" in d:
            d["background"] = BackgroundSpec.from_dict(d["background"])
        if d.get("object") is not None:
            d["object"] = ObjectSpec.from_dict(d["object"])
        if "degradation" in d:
            d["degradation"] = DegradationSpec.from_dict(d["degradation"])
        return cls(**d)

    def to_dict(self) -> dict:
        return json.loads(json.dumps(asdict(self)))

    def validate(self) -> None:
        if self.width < 1 or self.height < 1 or self.frames < 1:
            raise ValueError("scenario width, height and frames must be >= 1")
        for p in self.background.panels:
            if p.x < 0 or p.y < 0 or p.x + p.width > self.width or p.y + p.height > self.height:
                raise ValueError(f"background panel {p} leaves the frame")
        o = self.object
        if o is None:
            return
        if o.width < 1 or o.height < 1:
            raise ValueError("object width and height must be >= 1")
        if not 0 <= o.entry_frame < self.frames:
            raise ValueError(f"object entry_frame {o.entry_frame} outside [0, {self.frames})")
        if o.stop_frame is not None:
            if o.stop_frame < o.entry_frame:
                raise ValueError("object stop_frame precedes entry_frame")
            if o.stop_frame >= self.frames:
                raise ValueError(f"object stop_frame {o.stop_frame} outside [0, {self.frames})")
        elif o.speed <= 0:
            raise ValueError("a never-stopping object needs speed > 0")
        for x, y in o.path:
            if x < 0 or y < 0 or x + o.width > self.width or y + o.height > self.height:
                raise ValueError(
                    f"object at path point ({x}, {y}) with size {o.width}x{o.height} "
                    f"leaves the {self.width}x{self.height} frame"
                )


def load_scenario(path) -> Scenario:
    import yaml

    with open(path) as fh:
        data = yaml.safe_load(fh)
    return Scenario.from_dict(data or {})


# ---------------------------------------------------------------------------
# rasterization

def _rng(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *key]))


def _shape_mask(o: ObjectSpec) -> np.ndarray:
    yy, xx = np.mgrid[0:o.height, 0:o.width]
    cx, cy = xx + 0.5, yy + 0.5
    if o.shape == "rectangle":
        return np.ones((o.height, o.width), dtype=bool)
    if o.shape == "ellipse":
        rx, ry = o.width / 2.0, o.height / 2.0
        return ((cx - rx) / rx) ** 2 + ((cy - ry) / ry) ** 2 <= 1.0
    # even-odd rule on pixel centres; vertices in local bbox coordinates
    inside = np.zeros((o.height, o.width), dtype=bool)
    vs = list(o.vertices)
    for (x0, y0), (x1, y1) in zip(vs, vs[1:] + vs[:1]):
        if y0 == y1:
            continue
        crosses = (cy >= min(y0, y1)) & (cy < max(y0, y1))
        xint = x0 + (cy - y0) * (x1 - x0) / (y1 - y0)
        inside ^= crosses & (cx < xint)
    return inside


def _texture(rng: np.random.Generator, shape, level, jitter, dark_fraction, dark_level) -> np.ndarray:
    tex = np.full(shape, float(level))
    if jitter:
        tex += rng.uniform(-jitter, jitter, size=shape)
    if dark_fraction:
        tex[rng.random(shape) < dark_fraction] = dark_level
    return np.clip(tex, 0.0, 1.0)


def _background(s: Scenario) -> np.ndarray:
    b = s.background
    shape = (s.height, s.width)
    if b.kind == "uniform":
        g = np.full(shape, float(b.level))
    elif b.kind == "gradient":
        axis = np.linspace(b.start, b.end, s.width if b.direction == "horizontal" else s.height)
        g = np.broadcast_to(axis[None, :] if b.direction == "horizontal" else axis[:, None], shape).copy()
    else:
        g = _texture(_rng(s.seed, _STREAM_BACKGROUND), shape, b.level, b.jitter, b.dark_fraction, b.dark_level)
    for p in b.panels:
        g[p.y:p.y + p.height, p.x:p.x + p.width] = p.level
    return g


def _object_texture(s: Scenario) -> np.ndarray:
    o = s.object
    return _texture(_rng(s.seed, _STREAM_OBJECT), (o.height, o.width), o.intensity, o.jitter,
                    o.dark_fraction, 0.0)


def _position(o: ObjectSpec, i: int) -> tuple[int, int] | None:
    """Top-left of the object at frame ``i`` (None before entry)."""
    if i < o.entry_frame:
        return None
    pts = np.asarray(o.path, dtype=np.float64)
    if len(pts) == 1:
        return int(pts[0, 0]), int(pts[0, 1])
    seg = np.hypot(*np.diff(pts, axis=0).T)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]
    if o.stop_frame is not None:
        span = o.stop_frame - o.entry_frame
        frac = 1.0 if span == 0 else min(1.0, (i - o.entry_frame) / span)
        d = frac * total
    else:
        d = (i - o.entry_frame) * o.speed
        if total > 0:
            d = d % (2 * total)
            d = 2 * total - d if d > total else d
    x = np.interp(d, cum, pts[:, 0])
    y = np.interp(d, cum, pts[:, 1])
    return int(np.floor(x + 0.5)), int(np.floor(y + 0.5))


@dataclass
class GroundTruth:
    """Per-frame object masks, motion flags and clean frames, built on demand."""

    scenario: Scenario
    _seq: "SyntheticSequence" = field(repr=False)

    def __len__(self) -> int:
        return self.scenario.frames

    def mask(self, i: int) -> np.ndarray:
        return self._seq._object_mask(i)

    def flag(self, i: int) -> str:
        o = self.scenario.object
        if o is None or i < o.entry_frame:
            return "absent"
        if o.stop_frame is not None and i >= o.stop_frame:
            return "static"
        return "moving"

    def flags(self) -> list[str]:
        return [self.flag(i) for i in range(len(self))]

    def clean(self, i: int) -> np.ndarray:
        return self._seq._clean(i)

    def droplet_mask(self, i: int) -> np.ndarray:
        return self._seq._droplets(i)


class SyntheticSequence:
    """Lazy, indexable sequence of degraded RGB frames for a scenario."""

    def __init__(self, scenario: Scenario):
        self.scenario = scenario
        self._bg = _background(scenario)
        if scenario.object is not None:
            self._obj_mask = _shape_mask(scenario.object)
            self._obj_tex = _object_texture(scenario)

    def __len__(self) -> int:
        return self.scenario.frames

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def _check(self, i: int) -> int:
        if i < 0:
            i += len(self)
        if not 0 <= i < len(self):
            raise IndexError(f"frame {i} outside sequence of {len(self)}")
        return i

    def _object_mask(self, i: int) -> np.ndarray:
        i = self._check(i)
        s = self.scenario
        m = np.zeros((s.height, s.width), dtype=bool)
        pos = None if s.object is None else _position(s.object, i)
        if pos is not None:
            x, y = pos
            o = s.object
            m[y:y + o.height, x:x + o.width] = self._obj_mask
        return m

    def _clean(self, i: int) -> np.ndarray:
        i = self._check(i)
        s = self.scenario
        g = self._bg.copy()
        pos = None if s.object is None else _position(s.object, i)
        if pos is not None:
            x, y = pos
            o = s.object
            win = g[y:y + o.height, x:x + o.width]
            win[self._obj_mask] = self._obj_tex[self._obj_mask]
        return np.repeat(g[..., None], 3, axis=2)

    def _droplets(self, i: int) -> np.ndarray:
        i = self._check(i)
        s = self.scenario
        m = np.zeros((s.height, s.width), dtype=bool)
        d = s.degradation.droplets
        if d is None or i < d.onset or (i - d.onset) % max(d.every, 1):
            return m
        rng = _rng(s.seed, _STREAM_DROPLETS, i)
        yy, xx = np.mgrid[0:s.height, 0:s.width]
        for cx, cy in zip(rng.integers(0, s.width, d.count), rng.integers(0, s.height, d.count)):
            m |= (xx - cx) ** 2 + (yy - cy) ** 2 <= d.radius ** 2
        return m

    def __getitem__(self, i: int) -> np.ndarray:
        i = self._check(i)
        s = self.scenario
        deg = s.degradation
        f = self._clean(i)
        if deg.gradient is not None and i >= deg.gradient.onset:
            f = apply_illumination_gradient(f, deg.gradient.direction, deg.gradient.strength)
        if deg.haze is not None and i >= deg.haze.onset:
            f = apply_haze(f, deg.haze.t, deg.haze.airlight)
        if deg.droplets is not None:
            dm = self._droplets(i)
            f[dm] = deg.droplets.intensity
        if deg.noise_sigma > 0:
            f = apply_noise(f, deg.noise_sigma, np.random.SeedSequence([s.seed, _STREAM_NOISE, i]))
        return np.clip(f, 0.0, 1.0)


def generate(s: Scenario) -> tuple[SyntheticSequence, GroundTruth]:
    """Frames and ground truth for ``s``; both are lazy and deterministic."""
    s.validate()
    seq = SyntheticSequence(s)
    return seq, GroundTruth(s, seq)


def write_sequence(s: Scenario, out_dir, frame_pattern: str = "frame_%05d.png",
                   mask_pattern: str = "mask_%05d.png") -> Path:
    """Write frames, masks and ``manifest.json`` under ``out_dir``."""
    from .io import write_frame, write_mask

    out = Path(out_dir)
    (out / "frames").mkdir(parents=True, exist_ok=True)
    (out / "masks").mkdir(parents=True, exist_ok=True)
    seq, gt = generate(s)
    entries = []
    for i in range(len(seq)):
        write_frame(out / "frames" / (frame_pattern % i), seq[i])
        m = gt.mask(i)
        write_mask(out / "masks" / (mask_pattern % i), m)
        entries.append({
            "index": i,
            "frame": f"frames/{frame_pattern % i}",
            "mask": f"masks/{mask_pattern % i}",
            "flag": gt.flag(i),
            "object_area": int(m.sum()),
            "droplet_pixels": int(gt.droplet_mask(i).sum()),
        })
    manifest = {"schema_version": 1, "scenario": s.to_dict(), "frames": entries}
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return out
