import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from dualfg.fusion import (Component, PostParams, connected_components, convex_hull, detect,
                           detect_all, dilate, ellipse, erode, largest_component, subtract_masks)
from oracles import brute_dilate, brute_erode, brute_hull_vertices, flood_fill_partition

masks = arrays(np.bool_, st.tuples(st.integers(1, 14), st.integers(1, 14)))


def _pixels(*yx, shape=(4, 4)):
    m = np.zeros(shape, dtype=bool)
    for y, x in yx:
        m[y, x] = True
    return m


# -- subtraction ---------------------------------------------------------------

def test_subtract_truth_table():
    dfg = _pixels((1, 1), (2, 2))
    bsfg = _pixels((2, 2))
    np.testing.assert_array_equal(subtract_masks(dfg, bsfg), _pixels((1, 1)))


@given(masks, st.data())
def test_subtract_properties(a, data):
    b = data.draw(arrays(np.bool_, a.shape))
    empty = np.zeros_like(a)
    np.testing.assert_array_equal(subtract_masks(a, empty), a)
    assert not subtract_masks(a, a).any()
    out = subtract_masks(a, b)
    assert not np.any(out & ~a)
    for y in range(a.shape[0]):
        for x in range(a.shape[1]):
            assert out[y, x] == (a[y, x] and not b[y, x])


def test_subtract_shape_mismatch():
    with pytest.raises(ValueError):
        subtract_masks(np.zeros((3, 3), bool), np.zeros((3, 4), bool))


# -- structuring elements and morphology --------------------------------------------

def test_ellipse_footprints():
    np.testing.assert_array_equal(ellipse(3).bits, [[0, 1, 0], [1, 1, 1], [0, 1, 0]])
    e5 = ellipse(5).bits
    np.testing.assert_array_equal(e5, [[0, 0, 1, 0, 0],
                                       [1, 1, 1, 1, 1],
                                       [1, 1, 1, 1, 1],
                                       [1, 1, 1, 1, 1],
                                       [0, 0, 1, 0, 0]])
    assert e5.sum() == 17
    with pytest.raises(ValueError):
        ellipse(4)


def test_erode_examples():
    full = np.ones((7, 9), dtype=bool)
    out = erode(full, ellipse(3))
    expect = np.zeros_like(full)
    expect[1:-1, 1:-1] = True
    np.testing.assert_array_equal(out, expect)
    np.testing.assert_array_equal(out, brute_erode(full, ellipse(3).bits))
    assert not erode(_pixels((2, 2)), ellipse(3)).any()


def test_dilate_examples():
    assert not dilate(np.zeros((5, 5), bool), ellipse(5)).any()
    m = np.zeros((9, 9), dtype=bool)
    m[4, 4] = True
    out = dilate(m, ellipse(5))
    expect = np.zeros_like(m)
    expect[2:7, 2:7] = ellipse(5).bits
    np.testing.assert_array_equal(out, expect)


@pytest.mark.parametrize("size", [1, 3, 5, 7])
@given(m=masks)
def test_morphology_matches_brute_force(size, m):
    se = ellipse(size)
    np.testing.assert_array_equal(erode(m, se), brute_erode(m, se.bits))
    np.testing.assert_array_equal(dilate(m, se), brute_dilate(m, se.bits))


@given(masks, st.sampled_from([3, 5]))
def test_morphology_order_properties(m, size):
    se = ellipse(size)
    assert not np.any(erode(m, se) & ~m)
    assert not np.any(m & ~dilate(m, se))
    opened = dilate(erode(m, se), se)
    np.testing.assert_array_equal(dilate(erode(opened, se), se), opened)


# -- connected components ---------------------------------------------------------------

def test_components_examples():
    assert connected_components(np.zeros((5, 5), bool)) == []
    cs = connected_components(_pixels((1, 1), (2, 2)))
    assert len(cs) == 1 and cs[0].area == 2


def test_component_statistics():
    m = np.zeros((6, 8), dtype=bool)
    m[1:3, 2:6] = True  # 2 x 4 block
    m[5, 0] = True
    cs = connected_components(m)
    assert [c.label for c in cs] == [1, 2]
    a, b = cs
    assert a.area == 8 and a.bbox == (2, 1, 4, 2) and a.centroid == (3.5, 1.5)
    assert b.area == 1 and b.bbox == (0, 5, 1, 1) and b.centroid == (0.0, 5.0)
    with pytest.raises(ValueError):
        connected_components(m, connectivity=4)


def _partition(cs):
    return {frozenset((int(y), int(x)) for x, y in c.pixels) for c in cs}


@given(masks)
def test_components_partition_property(m):
    cs = connected_components(m)
    assert sum(c.area for c in cs) == m.sum()
    assert _partition(cs) == set(flood_fill_partition(m))
    firsts = [min((y, x) for x, y in c.pixels) for c in cs]
    assert firsts == sorted(firsts)


def test_components_against_flood_fill_many_seeds():
    for seed in range(200):
        rng = np.random.default_rng(seed)
        m = rng.random((32, 32)) < rng.uniform(0.2, 0.7)
        assert _partition(connected_components(m)) == set(flood_fill_partition(m))


# -- largest component --------------------------------------------------------------

def _comp(area, label=1):
    return Component(label, area, (0, 0, 1, 1), (0.0, 0.0), np.zeros((area, 2), dtype=np.int64))


def test_largest_component_examples():
    assert largest_component([], 0) is None
    cs = [_comp(5, 1), _comp(40, 2), _comp(12, 3)]
    assert largest_component(cs, 10).area == 40
    assert largest_component(cs, 41) is None


# -- convex hull ------------------------------------------------------------------------

def test_hull_examples():
    assert set(convex_hull([(0, 0), (4, 0), (1, 3)])) == {(0, 0), (4, 0), (1, 3)}
    assert set(convex_hull([(0, 0), (2, 0), (2, 2), (0, 2), (1, 1)])) == {(0, 0), (2, 0), (2, 2), (0, 2)}
    assert convex_hull([(3, 3), (3, 3)]) == [(3, 3)]
    with pytest.raises(ValueError):
        convex_hull([])


def _cross(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


points = st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=1, max_size=60)


@given(points)
def test_hull_matches_brute_force_and_contains_points(pts):
    hull = convex_hull(pts)
    assert set(hull) == brute_hull_vertices(pts)
    if len(hull) >= 3:
        for k in range(len(hull)):
            a, b = hull[k], hull[(k + 1) % len(hull)]
            assert all(_cross(a, b, p) >= 0 for p in pts)
        area2 = sum(_cross((0, 0), hull[k], hull[(k + 1) % len(hull)]) for k in range(len(hull)))
        assert area2 > 0  # counter-clockwise in (x, y)


# -- detect ---------------------------------------------------------------------------

def _opened_block_area():
    m = np.zeros((40, 40), dtype=bool)
    m[10:30, 10:30] = True
    return int(brute_dilate(brute_erode(m, ellipse(3).bits), ellipse(5).bits).sum()), m


def test_detect_block():
    area, dfg = _opened_block_area()
    det = detect(dfg, np.zeros_like(dfg), PostParams(min_area=50))
    assert det is not None
    # 18x18 after erosion; the outermost rows and columns regrow only
    # through the ellipse's single-pixel tips, so they stay 18 long
    assert area == 20 * 22 + 2 * 18
    assert det.component.area == area
    assert set(det.hull) == {(11, 9), (28, 9), (30, 10), (30, 29), (28, 30), (11, 30), (9, 29), (9, 10)}


def test_detect_empty_and_covered():
    z = np.zeros((20, 20), dtype=bool)
    assert detect(z, z, PostParams(min_area=1)) is None
    dfg = z.copy()
    dfg[5:15, 5:15] = True
    assert detect(dfg, dfg, PostParams(min_area=1)) is None


@given(arrays(np.bool_, (24, 24), elements=st.booleans()), st.integers(0, 200), st.integers(0, 200))
def test_detect_monotone_in_min_area(m, a, b):
    lo, hi = sorted((a, b))
    z = np.zeros_like(m)
    if detect(m, z, PostParams(min_area=lo)) is None:
        assert detect(m, z, PostParams(min_area=hi)) is None


def test_detect_all_intermediates():
    dfg = np.zeros((30, 30), dtype=bool)
    dfg[5:20, 5:20] = True
    bsfg = np.zeros_like(dfg)
    bsfg[5:20, 5:8] = True
    fused, cleaned, comps, det = detect_all(dfg, bsfg, PostParams(min_area=10), 4)
    np.testing.assert_array_equal(fused, dfg & ~bsfg)
    assert det.frame_index == 4
    np.testing.assert_array_equal(det.mask(dfg.shape), cleaned)
    assert len(comps) == 1


def test_post_params_defaults():
    p = PostParams.for_roi(300, 300)
    assert p.min_area == 450 and p.erode_size == 3 and p.dilate_size == 5
    with pytest.raises(ValueError):
        PostParams(erode_size=2)
