from collections import deque

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.spatial import ConvexHull

from tactile_cues.frames import (DegeneratePatchError, DimensionMismatchError, FrameConfig,
                                 InvalidBaselineError, RawFrame, SensorGeometry, extract_features,
                                 image_moments, merge_hull, normalize, patch_features, segment_patch,
                                 signed_area, trace_boundary, upsample_bicubic)

GEO = SensorGeometry()


# --- independent oracles ------------------------------------------------------

def kernel(d, a=-0.5):
    d = abs(d)
    if d <= 1:
        return (a + 2) * d**3 - (a + 3) * d**2 + 1
    if d < 2:
        return a * d**3 - 5 * a * d**2 + 8 * a * d - 4 * a
    return 0.0


def upsample_loop(img, f):
    """Per-pixel Catmull-Rom evaluation with clamped source indices."""
    rows, cols = img.shape
    out = np.empty((rows * f, cols * f))
    for u in range(rows * f):
        sy = (u + 0.5) / f - 0.5
        for v in range(cols * f):
            sx = (v + 0.5) / f - 0.5
            acc = 0.0
            for i in range(int(np.floor(sy)) - 1, int(np.floor(sy)) + 3):
                wy = kernel(sy - i)
                for j in range(int(np.floor(sx)) - 1, int(np.floor(sx)) + 3):
                    acc += wy * kernel(sx - j) * img[min(max(i, 0), rows - 1), min(max(j, 0), cols - 1)]
            out[u, v] = min(max(acc, 0.0), 255.0)
    return out


def flood_components(mask):
    """8-connected components by breadth-first flood fill."""
    seen = np.zeros_like(mask, dtype=bool)
    comps = []
    for r0, c0 in zip(*np.nonzero(mask)):
        if seen[r0, c0]:
            continue
        comp, q = [], deque([(r0, c0)])
        seen[r0, c0] = True
        while q:
            r, c = q.popleft()
            comp.append((r, c))
            for dr in (-1, 0, 1):
                for dc in (-1, 0, 1):
                    rr, cc = r + dr, c + dc
                    if 0 <= rr < mask.shape[0] and 0 <= cc < mask.shape[1] and mask[rr, cc] and not seen[rr, cc]:
                        seen[rr, cc] = True
                        q.append((rr, cc))
        comps.append(comp)
    return comps


def blob(geo, center, sigma=4.0, depth=200.0):
    yy, xx = (np.mgrid[0:geo.rows, 0:geo.cols] + 0.5) * geo.pitch
    return 255.0 - depth * np.exp(-((xx - center[0]) ** 2 + (yy - center[1]) ** 2) / (2 * sigma**2))


# --- normalize ----------------------------------------------------------------

def test_normalize_identity_half_and_clamp():
    base = np.full((3, 4), 400)
    assert np.all(normalize(base.copy(), base) == 255)
    c = base.copy()
    c[1, 2] = 200
    out = normalize(c, base)
    assert out[1, 2] == 127.5 and np.count_nonzero(out == 255) == 11
    assert np.all(normalize((base * 1.1).astype(int), base) == 255)


def test_normalize_errors():
    with pytest.raises(DimensionMismatchError):
        normalize(np.ones((3, 4)), np.ones((4, 3)))
    base = np.ones((3, 4))
    base[0, 0] = 0
    with pytest.raises(InvalidBaselineError):
        normalize(np.ones((3, 4)), base)


def test_normalize_accepts_raw_frame():
    base = np.full(GEO.shape, 500)
    fr = RawFrame(0.0, (0.0, 0.0), np.full(GEO.shape, 250))
    assert np.allclose(normalize(fr, base), 127.5)


# --- upsampling ---------------------------------------------------------------

@pytest.mark.parametrize("factor", [1, 2, 3, 4, 8])
def test_upsample_constant(factor):
    img = np.full((5, 6), 137.25)
    assert np.allclose(upsample_bicubic(img, factor), 137.25, atol=1e-12)


def test_upsample_factor_one_is_bit_identical():
    img = np.random.default_rng(0).uniform(0, 255, (6, 5))
    out = upsample_bicubic(img, 1)
    assert out is not img and np.array_equal(out, img)


@pytest.mark.parametrize("factor", [2, 3, 4])
def test_upsample_matches_per_pixel_kernel(factor):
    img = np.random.default_rng(factor).uniform(0, 255, (5, 4))
    assert np.allclose(upsample_bicubic(img, factor), upsample_loop(img, factor), atol=1e-9)


def test_upsample_single_dark_pixel_centroid():
    img = np.full((9, 9), 255.0)
    img[4, 4] = 0.0
    fine = upsample_bicubic(img, 4)
    w = 255.0 - fine
    yy, xx = np.mgrid[0:36, 0:36] + 0.5
    cx = (w * xx).sum() / w.sum() / 4
    cy = (w * yy).sum() / w.sum() / 4
    assert abs(cx - 4.5) < 1e-9 and abs(cy - 4.5) < 1e-9
    assert np.allclose(fine, fine[::-1, :]) and np.allclose(fine, fine.T)


def test_upsample_rejects_zero_factor():
    with pytest.raises(ValueError):
        upsample_bicubic(np.ones((2, 2)), 0)


# --- segmentation -----------------------------------------------------------

def test_segment_all_bright_is_empty():
    assert segment_patch(np.full((16, 16), 255.0)) == []


def test_segment_single_block_boundary():
    img = np.full((16, 16), 255.0)
    img[3:8, 6:11] = 10.0
    (c,) = segment_patch(img)
    assert sorted(c) == sorted([(6, 3), (11, 3), (11, 8), (6, 8)])
    assert signed_area(c) == 25


def test_segment_two_blocks_matches_flood_fill():
    img = np.full((16, 16), 255.0)
    img[2:6, 2:6] = 0.0
    img[2:6, 9:13] = 0.0
    contours = segment_patch(img)
    assert len(contours) == len(flood_components(img <= 200)) == 2


def test_segment_threshold_range():
    with pytest.raises(ValueError):
        segment_patch(np.zeros((4, 4)), patch_threshold=255)


def test_segment_drops_small_components():
    img = np.full((10, 10), 255.0)
    img[1, 1] = 0.0
    img[5:8, 5:8] = 0.0
    assert len(segment_patch(img, min_component_area=4)) == 1
    assert len(segment_patch(img, min_component_area=1)) == 2


@given(st.integers(0, 2**32 - 1))
def test_components_match_flood_fill(seed):
    rng = np.random.default_rng(seed)
    mask = rng.uniform(size=(12, 12)) < 0.3
    img = np.where(mask, 0.0, 255.0)
    comps = flood_components(mask)
    contours = segment_patch(img, min_component_area=1)
    assert len(contours) == len(comps)
    # each boundary encloses at least the component's pixel count (holes are filled)
    areas = sorted(signed_area(c) for c in contours)
    sizes = sorted(len(c) for c in comps)
    assert sum(areas) >= sum(sizes)


def test_trace_boundary_diagonal_pinch_is_one_loop():
    mask = np.array([[1, 0], [0, 1]], dtype=bool)
    loop = trace_boundary(mask)
    assert signed_area(loop) == 2


# --- hull ----------------------------------------------------------------------

def test_hull_rectangle_is_itself():
    rect = [(0, 0), (4, 0), (4, 3), (0, 3)]
    h = merge_hull([rect])
    assert sorted(map(tuple, h.tolist())) == sorted(map(lambda p: (float(p[0]), float(p[1])), rect))
    assert signed_area(h) == 12


def test_hull_drops_interior_point():
    h = merge_hull([[(0, 0), (1, 0), (1, 1), (0, 1), (0.5, 0.5)]])
    assert len(h) == 4 and signed_area(h) == 1


def test_hull_two_disjoint_squares_spans_both():
    a = [(0, 0), (2, 0), (2, 2), (0, 2)]
    b = [(5, 1), (7, 1), (7, 3), (5, 3)]
    h = merge_hull([a, b])
    assert signed_area(h) > 0
    assert signed_area(h) == pytest.approx(ConvexHull(np.array(a + b, float)).volume)


def test_hull_collinear_raises():
    with pytest.raises(DegeneratePatchError):
        merge_hull([[(0, 0), (1, 1), (2, 2), (3, 3)]])


def test_hull_needs_a_contour():
    with pytest.raises(ValueError):
        merge_hull([])


point_sets = st.lists(st.tuples(st.integers(-20, 20), st.integers(-20, 20)), min_size=3, max_size=25)


def _hull_area_or_zero(pts):
    try:
        return signed_area(merge_hull([pts]))
    except DegeneratePatchError:
        return 0.0


@given(point_sets)
def test_hull_matches_qhull_and_is_ccw_without_collinear(pts):
    try:
        h = merge_hull([pts])
    except DegeneratePatchError:
        arr = np.array(pts, float)
        assert np.linalg.matrix_rank(arr[1:] - arr[0]) < 2
        return
    assert signed_area(h) == pytest.approx(ConvexHull(np.array(pts, float)).volume)
    n = len(h)
    for i in range(n):
        o, a, b = h[i - 1], h[i], h[(i + 1) % n]
        assert (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]) > 0


@given(point_sets, point_sets)
def test_hull_monotonicity(a, b):
    merged = _hull_area_or_zero(a + b)
    assert merged >= max(_hull_area_or_zero(a), _hull_area_or_zero(b)) - 1e-9


# --- patch features ---------------------------------------------------------

def test_single_dark_pixel_patch():
    fine = np.full((16, 16), 255.0)
    fine[5, 9] = 0.0
    hull = np.array([(9, 5), (10, 5), (10, 6), (9, 6)], float)
    f = patch_features(fine, hull, GEO, factor=8)
    scale = GEO.pitch / 8
    assert f.present
    assert f.cop == pytest.approx((9.5 * scale, 5.5 * scale), abs=1e-12)
    assert f.area == pytest.approx(scale**2)


def test_two_equal_pixels_symmetric_cop():
    w = np.array([1.0, 1.0])
    m00, m10, m01 = image_moments(w, np.array([0.0, 2.0]), np.array([0.0, 0.0]))
    assert (m10 / m00, m01 / m00) == (1.0, 0.0)


@pytest.mark.parametrize("r0,r1,c0,c1", [(3, 11, 5, 20), (10, 30, 2, 7), (0, 4, 0, 4)])
def test_uniform_rectangle_centroid(r0, r1, c0, c1):
    fine = np.full((40, 40), 255.0)
    fine[r0:r1, c0:c1] = 100.0
    (c,) = segment_patch(fine)
    f = patch_features(fine, merge_hull([c]), GEO, factor=8)
    scale = GEO.pitch / 8
    assert abs(f.cop[0] - 0.5 * (c0 + c1) * scale) <= 1e-9
    assert abs(f.cop[1] - 0.5 * (r0 + r1) * scale) <= 1e-9
    assert f.area == pytest.approx((r1 - r0) * (c1 - c0) * scale**2)


def test_zero_weight_hull_is_absent():
    fine = np.full((10, 10), 255.0)
    hull = np.array([(2, 2), (6, 2), (6, 6), (2, 6)], float)
    assert not patch_features(fine, hull, GEO, factor=8).present


def test_binary_weighting_switch():
    fine = np.full((20, 20), 255.0)
    fine[4:10, 4:10] = 150.0
    fine[4:10, 4] = 0.0  # heavy left column pulls the pressure centroid left
    hull = merge_hull(segment_patch(fine))
    scale = GEO.pitch / 8
    fb = patch_features(fine, hull, GEO, 8, weighting="binary")
    fp = patch_features(fine, hull, GEO, 8, weighting="pressure")
    assert fb.cop[0] == pytest.approx(7.0 * scale)
    assert fp.cop[0] < fb.cop[0]
    with pytest.raises(ValueError):
        patch_features(fine, hull, GEO, 8, weighting="other")


@given(st.floats(0.05, 1.0), st.integers(0, 2**32 - 1))
def test_cop_scale_invariance(c, seed):
    rng = np.random.default_rng(seed)
    fine = np.full((32, 32), 255.0)
    fine[6:20, 8:25] = rng.uniform(0, 200, (14, 17))
    hull = merge_hull(segment_patch(fine))
    scaled = 255.0 - c * (255.0 - fine)
    f1 = patch_features(fine, hull, GEO, 8)
    f2 = patch_features(scaled, hull, GEO, 8)
    assert np.allclose(f1.cop, f2.cop, atol=1e-9, rtol=0)


# kernel support is 2 taxels, so the patch stays >= 2 taxels from every border
@given(st.integers(-4, 4), st.integers(-2, 2), st.floats(-1.5, 1.5), st.floats(-2.0, 2.0))
def test_translation_equivariance(di, dj, ox, oy):
    base = np.full(GEO.shape, 500.0)
    center = (30.0 + ox, 50.0 + oy)
    img = blob(GEO, center)
    shifted = np.roll(np.roll(img, di, axis=0), dj, axis=1)
    f1 = extract_features(base * img / 255.0, base, GEO)
    f2 = extract_features(base * shifted / 255.0, base, GEO)
    assert f1.present and f2.present
    assert f2.cop[0] - f1.cop[0] == pytest.approx(dj * GEO.pitch, abs=1e-6)
    assert f2.cop[1] - f1.cop[1] == pytest.approx(di * GEO.pitch, abs=1e-6)
    assert f2.area == pytest.approx(f1.area, abs=1e-6)
    assert f2.intensity == pytest.approx(f1.intensity, abs=1e-6)


# smooth: blob width at least one taxel pitch
@given(st.floats(15.0, 45.0), st.floats(20.0, 80.0), st.floats(5.0, 10.0))
def test_upsample_consistency_factor_4_vs_8(cx, cy, sigma):
    base = np.full(GEO.shape, 500.0)
    counts = base * blob(GEO, (cx, cy), sigma) / 255.0
    f4 = extract_features(counts, base, GEO, FrameConfig(upsample=4))
    f8 = extract_features(counts, base, GEO, FrameConfig(upsample=8))
    assert f4.present and f8.present
    assert np.hypot(f4.cop[0] - f8.cop[0], f4.cop[1] - f8.cop[1]) <= 0.25


def test_feature_invariants_and_determinism():
    base = np.full(GEO.shape, 480.0)
    counts = base * blob(GEO, (31.0, 47.0)) / 255.0
    f1 = extract_features(counts, base, GEO)
    f2 = extract_features(counts.copy(), base.copy(), GEO)
    assert f1 == f2
    assert 0 <= f1.cop[0] <= GEO.width and 0 <= f1.cop[1] <= GEO.height
    assert f1.area > 0 and 0 <= f1.intensity <= 255


def test_no_contact_is_absent():
    base = np.full(GEO.shape, 480.0)
    f = extract_features(base, base, GEO)
    assert not f.present and f.area == 0


def test_disjoint_patches_merge_into_one():
    base = np.full(GEO.shape, 500.0)
    img = np.minimum(blob(GEO, (15.0, 50.0), 3.0), blob(GEO, (45.0, 50.0), 3.0))
    fine = upsample_bicubic(img, 8)
    assert len(segment_patch(fine)) == 2
    f = extract_features(base * img / 255.0, base, GEO)
    assert f.present
    assert f.cop[0] == pytest.approx(30.0, abs=1e-6)
    single = extract_features(base * blob(GEO, (15.0, 50.0), 3.0) / 255.0, base, GEO)
    assert f.area > 2 * single.area


def test_frame_dimension_checked_against_geometry():
    base = np.full((4, 4), 500.0)
    with pytest.raises(DimensionMismatchError):
        extract_features(base, base, GEO)
