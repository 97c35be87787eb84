import json

import numpy as np
import pytest
import yaml

from dualfg.imgcore import rgb_to_hsv
from dualfg.presets import PRESETS, preset
from dualfg.synthgen import (Scenario, apply_haze, apply_illumination_gradient, apply_noise,
                             generate, load_scenario, write_sequence)


def _small(**over):
    d = {"width": 40, "height": 30, "frames": 12, "seed": 3,
         "background": {"kind": "speckle", "level": 0.4, "jitter": 0.05, "dark_fraction": 0.1}}
    d.update(over)
    return Scenario.from_dict(d)


def test_no_object_no_degradation():
    s = _small()
    seq, gt = generate(s)
    for i in range(len(seq)):
        np.testing.assert_array_equal(seq[i], seq[0])
        assert not gt.mask(i).any() and gt.flag(i) == "absent"


def test_static_object_from_frame_zero():
    s = _small(object={"shape": "rectangle", "width": 10, "height": 6, "intensity": 0.9,
                       "entry_frame": 0, "stop_frame": 0, "path": [[5, 4]]})
    seq, gt = generate(s)
    expect = np.zeros((30, 40), dtype=bool)
    expect[4:10, 5:15] = True
    for i in range(len(seq)):
        np.testing.assert_array_equal(gt.mask(i), expect)
        assert gt.flag(i) == "static"
    # no jitter: the clean frame holds exactly the object intensity under the mask
    assert np.all(gt.clean(3)[expect] == 0.9)


def test_same_seed_is_bit_identical():
    s = preset("degraded")
    a, _ = generate(s)
    b, _ = generate(Scenario.from_dict(s.to_dict()))
    for i in (0, 25, 70, 199):
        assert a[i].tobytes() == b[i].tobytes()
    c, _ = generate(Scenario.from_dict({**s.to_dict(), "seed": 8}))
    assert not np.array_equal(a[70], c[70])


def test_masks_ignore_degradations():
    plain, gt_plain = generate(preset("drop-and-settle"))
    _, gt_deg = generate(preset("degraded"))
    for i in (0, 19, 20, 40, 60, 150):
        np.testing.assert_array_equal(gt_plain.mask(i), gt_deg.mask(i))


def test_flags_and_masks_agree():
    _, gt = generate(preset("drop-and-settle"))
    flags = gt.flags()
    assert flags[:20] == ["absent"] * 20
    assert set(flags[20:60]) == {"moving"} and set(flags[60:]) == {"static"}
    for i in range(0, 200, 7):
        assert (not gt.mask(i).any()) == (flags[i] == "absent")
    np.testing.assert_array_equal(gt.mask(60), gt.mask(199))
    assert not np.array_equal(gt.mask(30), gt.mask(40))


def test_moving_only_never_static():
    _, gt = generate(preset("moving-only"))
    assert "static" not in gt.flags()


def test_object_leaving_frame_rejected():
    with pytest.raises(ValueError, match="leaves"):
        _small(object={"width": 10, "height": 10, "path": [[35, 0]]})
    with pytest.raises(ValueError):
        _small(object={"entry_frame": 5, "stop_frame": 3})


def test_unknown_keys_rejected():
    with pytest.raises(ValueError, match="unknown"):
        Scenario.from_dict({"widht": 10})
    with pytest.raises(ValueError, match="unknown"):
        _small(degradation={"haze": {"tt": 0.5}})


def test_haze_examples():
    f = np.random.default_rng(0).random((5, 5, 3))
    np.testing.assert_array_equal(apply_haze(f, 1.0, (0.9, 0.9, 0.9)), f)
    np.testing.assert_allclose(apply_haze(f, 0.0, (0.9, 0.8, 0.7)), np.broadcast_to([0.9, 0.8, 0.7], f.shape))
    np.testing.assert_allclose(apply_haze(f, 0.6, 0.9), f * 0.6 + 0.9 * 0.4, atol=1e-15)


def test_gradient_examples():
    f = np.full((9, 11, 3), 0.5)
    np.testing.assert_array_equal(apply_illumination_gradient(f, "horizontal", 0.0), f)
    out = rgb_to_hsv(apply_illumination_gradient(f, "horizontal", 0.3))[..., 2]
    np.testing.assert_allclose(out, np.tile(0.5 + 0.3 * (np.linspace(0, 1, 11) - 0.5), (9, 1)), atol=1e-12)
    both = apply_illumination_gradient(apply_illumination_gradient(f, "horizontal", 0.2), "vertical", 0.2)
    np.testing.assert_allclose(apply_illumination_gradient(f, "diagonal", 0.2), both, atol=1e-12)
    with pytest.raises(ValueError):
        apply_illumination_gradient(f, "sideways", 0.1)


def test_noise_examples():
    f = np.full((300, 300, 3), 0.5)
    np.testing.assert_array_equal(apply_noise(f, 0.0, 1), f)
    a = apply_noise(f, 0.02, 11)
    np.testing.assert_array_equal(a, apply_noise(f, 0.02, 11))
    d = a - f
    n = d.size
    assert abs(d.mean()) <= 3 * 0.02 / np.sqrt(n)
    assert d.std() == pytest.approx(0.02, rel=0.01)
    with pytest.raises(ValueError):
        apply_noise(f, -1.0, 0)


def test_droplets_are_transient():
    s = _small(degradation={"droplets": {"count": 5, "radius": 1, "onset": 2, "every": 3}})
    seq, gt = generate(s)
    assert not gt.droplet_mask(0).any() and not gt.droplet_mask(3).any()
    assert gt.droplet_mask(2).any() and gt.droplet_mask(5).any()
    assert np.all(seq[2][gt.droplet_mask(2)] == 1.0)


def test_write_sequence_and_yaml(tmp_path):
    s = _small(frames=4, object={"width": 6, "height": 6, "entry_frame": 1, "stop_frame": 2,
                                 "path": [[2, 2], [10, 5]]})
    scen = tmp_path / "s.yaml"
    scen.write_text(yaml.safe_dump(s.to_dict()))
    assert load_scenario(scen) == s
    out = write_sequence(s, tmp_path / "gen")
    manifest = json.loads((out / "manifest.json").read_text())
    assert [e["flag"] for e in manifest["frames"]] == ["absent", "moving", "static", "static"]
    assert sorted(p.name for p in (out / "frames").iterdir())[0] == "frame_00000.png"
    assert len(list((out / "masks").iterdir())) == 4


def test_indexing():
    seq, _ = generate(_small())
    np.testing.assert_array_equal(seq[-1], seq[len(seq) - 1])
    with pytest.raises(IndexError):
        seq[len(seq)]


@pytest.mark.parametrize("name", sorted(PRESETS))
def test_presets_validate(name):
    s = preset(name)
    assert (s.width, s.height, s.frames) == (300, 300, 200)
