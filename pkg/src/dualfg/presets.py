"""Ready-made synthetic scenarios.

``drop_and_settle`` has an object that drives in, stops and stays;
``moving_only`` keeps it circling forever; ``degraded`` is the first one
with an illumination ramp and haze switched on when the object enters.
"""
from __future__ import annotations

import copy

from .synthgen import Scenario

_OBJECT_OUTLINE = [[0, 40], [10, 12], [30, 0], [55, 6], [70, 30], [62, 55], [35, 60], [8, 56]]

_BASE = {
    "width": 300,
    "height": 300,
    "frames": 200,
    "seed": 7,
    "background": {
        "kind": "speckle", "level": 0.35, "jitter": 0.05, "dark_fraction": 0.05,
        # bright patch away from the object so the airlight estimate has a target
        "panels": [{"x": 220, "y": 220, "width": 40, "height": 40, "level": 1.0}],
    },
    "object": {
        "shape": "polygon", "width": 70, "height": 60, "vertices": _OBJECT_OUTLINE,
        "intensity": 0.8, "jitter": 0.08, "dark_fraction": 0.05,
        "entry_frame": 20, "stop_frame": 60, "path": [[20, 30], [115, 130]], "speed": 3.0,
    },
    "degradation": {"noise_sigma": 0.02},
}


def drop_and_settle_dict(seed: int = 7) -> dict:
    d = copy.deepcopy(_BASE)
    d["seed"] = seed
    return d


def moving_only_dict(seed: int = 7, speed: float = 3.0) -> dict:
    d = drop_and_settle_dict(seed)
    d["background"]["panels"] = []
    d["object"].update(stop_frame=None, speed=speed,
                       path=[[20, 30], [210, 30], [210, 220], [20, 220], [20, 30]])
    return d


def degraded_dict(seed: int = 7, gradient_strength: float = 0.3, haze_t: float = 0.6) -> dict:
    d = drop_and_settle_dict(seed)
    d["degradation"].update(
        gradient={"direction": "diagonal", "strength": gradient_strength, "onset": 20},
        haze={"t": haze_t, "airlight": [0.9, 0.9, 0.9], "onset": 20},
    )
    return d


PRESETS = {
    "drop-and-settle": drop_and_settle_dict,
    "moving-only": moving_only_dict,
    "degraded": degraded_dict,
}


def preset(name: str, **kw) -> Scenario:
    try:
        build = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return Scenario.from_dict(build(**kw))
