"""Frame/mask image I/O and numbered-sequence discovery."""
from __future__ import annotations

import logging
import re
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

log = logging.getLogger(__name__)

__all__ = [
    "read_frame",
    "write_frame",
    "read_mask",
    "write_mask",
    "pattern_regex",
    "FrameSequence",
    "load_sequence",
    "find_indexed",
]

_PRINTF = re.compile(r"%(0?)(\d*)d")


def read_frame(path) -> np.ndarray:
    """Read an 8-bit grey or RGB image as an (H, W, 3) float frame in [0, 1]."""
    with Image.open(path) as im:
        if im.mode not in ("L", "RGB", "RGBA", "P", "LA", "I;16", "I"):
            raise ValueError(f"{path}: unsupported image mode {im.mode}")
        if im.mode in ("I;16", "I"):
            raise ValueError(f"{path}: only 8-bit images are supported")
        arr = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
    return arr


def write_frame(path, f: np.ndarray) -> None:
    data = np.clip(np.floor(np.asarray(f) * 255.0 + 0.5), 0, 255).astype(np.uint8)
    Image.fromarray(data, mode="L" if data.ndim == 2 else "RGB").save(path, format="PNG")


def read_mask(path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("L")) >= 128


def write_mask(path, m: np.ndarray) -> None:
    Image.fromarray(np.where(m, 255, 0).astype(np.uint8), mode="L").save(path, format="PNG")


def pattern_regex(pattern: str) -> re.Pattern:
    """Regex for a filename pattern holding one printf ``%d``/``%05d`` placeholder."""
    found = list(_PRINTF.finditer(pattern))
    if len(found) != 1:
        raise ValueError(f"pattern {pattern!r} must contain exactly one %d-style index placeholder")
    m = found[0]
    width = int(m.group(2)) if m.group(2) else None
    digits = rf"(\d{{{width}}})" if m.group(1) and width else r"(\d+)"
    return re.compile(re.escape(pattern[:m.start()]) + digits + re.escape(pattern[m.end():]) + r"\Z")


def find_indexed(directory, pattern: str) -> dict[int, Path]:
    rx = pattern_regex(pattern)
    out: dict[int, Path] = {}
    for p in Path(directory).iterdir():
        hit = rx.match(p.name)
        if hit and p.is_file():
            out[int(hit.group(1))] = p
    return out


@dataclass
class FrameSequence:
    indices: list[int]
    paths: list[Path]

    def __len__(self) -> int:
        return len(self.paths)

    def __getitem__(self, k: int) -> np.ndarray:
        return read_frame(self.paths[k])

    def __iter__(self):
        for p in self.paths:
            yield read_frame(p)


def load_sequence(directory, pattern: str, *, allow_gaps: bool = False) -> FrameSequence:
    """Numbered frames in ``directory`` sorted by index.

    A gap in the numbering is an error unless ``allow_gaps``, in which case
    it is logged and skipped.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"input directory {directory} does not exist")
    found = find_indexed(directory, pattern)
    if not found:
        raise ValueError(f"no frames matching {pattern!r} in {directory}")
    idx = sorted(found)
    missing = sorted(set(range(idx[0], idx[-1] + 1)) - set(idx))
    if missing:
        if not allow_gaps:
            raise ValueError(f"frame numbering has gaps; missing index {missing[0]}"
                             + (f" (and {len(missing) - 1} more)" if len(missing) > 1 else ""))
        log.warning("skipping %d missing frame index(es), first %d", len(missing), missing[0])
    return FrameSequence(idx, [found[i] for i in idx])
