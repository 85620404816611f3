from collections import deque

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from gaitsynth.errors import DegenerateImage, DimensionMismatch, EmptyForeground
from gaitsynth.segmentation import (background_subtract, chroma_key, cluster_threshold,
                                    lab_to_rgb, largest_component, rgb_to_lab, segment_lab,
                                    two_means)
from gaitsynth.similarity import jaccard
from gaitsynth.walker import ConfounderConfig, generate_sequence


def lab_oracle(r, g, b):
    """Scalar sRGB (D65) -> CIELAB written directly from the textbook formulas."""
    def lin(c):
        c /= 255.0
        return c / 12.92 if c <= 0.04045 else ((c + 0.055) / 1.055) ** 2.4
    R, G, B = lin(float(r)), lin(float(g)), lin(float(b))
    X = 0.4124564 * R + 0.3575761 * G + 0.1804375 * B
    Y = 0.2126729 * R + 0.7151522 * G + 0.0721750 * B
    Z = 0.0193339 * R + 0.1191920 * G + 0.9503041 * B
    def f(t):
        return t ** (1 / 3) if t > (6 / 29) ** 3 else t / (3 * (6 / 29) ** 2) + 4 / 29
    fx, fy, fz = f(X / 0.95047), f(Y / 1.0), f(Z / 1.08883)
    return 116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)


def components_oracle(mask):
    """Sizes of 8-connected components by breadth-first flood fill."""
    h, w = mask.shape
    seen = np.zeros_like(mask)
    sizes = []
    for r in range(h):
        for c in range(w):
            if mask[r, c] and not seen[r, c]:
                seen[r, c] = True
                q, n = deque([(r, c)]), 0
                while q:
                    y, x = q.popleft()
                    n += 1
                    for dy in (-1, 0, 1):
                        for dx in (-1, 0, 1):
                            yy, xx = y + dy, x + dx
                            if 0 <= yy < h and 0 <= xx < w and mask[yy, xx] and not seen[yy, xx]:
                                seen[yy, xx] = True
                                q.append((yy, xx))
                sizes.append(n)
    return sizes


# -- LAB ----------------------------------------------------------------------

def test_lab_white_and_black():
    white = rgb_to_lab(np.array([[[255, 255, 255]]], dtype=np.uint8))[0, 0]
    black = rgb_to_lab(np.array([[[0, 0, 0]]], dtype=np.uint8))[0, 0]
    assert white == pytest.approx([100, 0, 0], abs=0.1)
    assert black == pytest.approx([0, 0, 0], abs=1e-9)


def test_lab_mid_grey():
    lab = rgb_to_lab(np.array([[[119, 119, 119]]], dtype=np.uint8))[0, 0]
    assert lab[0] == pytest.approx(50.0, abs=0.2)
    assert lab[1:] == pytest.approx([0, 0], abs=0.01)


@settings(max_examples=60)
@given(st.tuples(*[st.integers(0, 255)] * 3))
def test_lab_matches_scalar_oracle(rgb):
    got = rgb_to_lab(np.array([[rgb]], dtype=np.uint8))[0, 0]
    assert got == pytest.approx(lab_oracle(*rgb), abs=1e-3)


@settings(max_examples=40)
@given(arrays(np.uint8, (4, 5, 3)))
def test_lab_round_trip(img):
    back = lab_to_rgb(rgb_to_lab(img))
    assert np.abs(back - img).max() <= 0.5


# -- background subtraction ----------------------------------------------------

def test_identical_frames_give_zero_difference(rng):
    img = rng.integers(0, 256, (6, 7, 3)).astype(np.uint8)
    assert not background_subtract(img, img).any()
    with pytest.raises(DegenerateImage):
        cluster_threshold(background_subtract(img, img))


def test_single_pixel_lightness_step():
    lab = np.zeros((3, 3, 3))
    lab[..., 0] = 40.0
    bg = lab_to_rgb(lab)
    lab[1, 2, 0] = 70.0
    fg = lab_to_rgb(lab)
    d = background_subtract(fg, bg)
    expected = np.zeros((3, 3))
    expected[1, 2] = 30.0
    assert d == pytest.approx(expected, abs=1e-6)


def test_background_subtract_shape_mismatch():
    with pytest.raises(DimensionMismatch):
        background_subtract(np.zeros((10, 10, 3)), np.zeros((10, 11, 3)))


# -- two-class threshold --------------------------------------------------------

def test_two_levels_split_at_midpoint():
    gray = np.array([[10, 200, 10], [200, 10, 200]])
    lo, hi, t = two_means(gray)
    assert (lo, hi, t) == (10, 200, 105)
    assert np.array_equal(cluster_threshold(gray), gray == 200)


def test_constant_image_is_degenerate():
    with pytest.raises(DegenerateImage):
        cluster_threshold(np.full((4, 4), 7))


def test_lloyd_fixed_point_on_skewed_levels():
    # start at {0, 255}: t=127.5 -> {40, 255} -> t=147.5, stable
    gray = np.array([0, 0, 0, 100, 100, 255])
    lo, hi, t = two_means(gray)
    assert (lo, hi, t) == (40.0, 255.0, 147.5)
    assert cluster_threshold(gray).tolist() == [False] * 5 + [True]


@settings(max_examples=60)
@given(st.lists(st.integers(0, 40), min_size=1, max_size=30),
       st.lists(st.integers(200, 255), min_size=1, max_size=30))
def test_well_separated_levels_split_exactly(low, high):
    gray = np.array(low + high)
    assert cluster_threshold(gray).tolist() == [False] * len(low) + [True] * len(high)


@settings(max_examples=60)
@given(arrays(np.int64, 20, elements=st.integers(0, 255)).filter(lambda a: a.min() < a.max()),
       st.sampled_from([0.5, 2.0, 3.0, 10.0]), st.integers(-100, 100))
def test_threshold_invariant_under_affine_rescaling(gray, slope, offset):
    assert np.array_equal(cluster_threshold(gray), cluster_threshold(slope * gray + offset))


# -- chroma key -----------------------------------------------------------------

def test_chroma_key_cases():
    key = (0, 177, 64)
    img = np.empty((3, 4, 3), dtype=np.uint8)
    img[:] = key
    assert not chroma_key(img, key).any()
    img[1, 2, 1] = 178
    mask = chroma_key(img, key, tolerance=0)
    assert mask.sum() == 1 and mask[1, 2]


@settings(max_examples=40)
@given(arrays(np.uint8, (5, 5, 3)), st.integers(0, 254), st.integers(1, 100))
def test_chroma_key_monotone_in_tolerance(img, t, dt):
    key = (30, 160, 90)
    assert not (chroma_key(img, key, t + dt) & ~chroma_key(img, key, t)).any()


# -- connected components --------------------------------------------------------

def test_single_blob_unchanged():
    m = np.zeros((8, 8), dtype=bool)
    m[2:5, 3:7] = True
    assert np.array_equal(largest_component(m), m)


def test_speck_removed():
    m = np.zeros((20, 20), dtype=bool)
    m[2:12, 2:7] = True           # 50 pixels
    m[16, 15:18] = True           # 3 pixels
    assert sorted(components_oracle(m)) == [3, 50]
    out = largest_component(m)
    assert out.sum() == 50 and not out[16].any()


def test_diagonal_neighbours_connect():
    m = np.eye(5, dtype=bool)
    assert np.array_equal(largest_component(m), m)


def test_empty_mask_raises():
    with pytest.raises(EmptyForeground):
        largest_component(np.zeros((3, 3), dtype=bool))


@settings(max_examples=60)
@given(arrays(bool, (9, 11)).filter(lambda m: m.any()))
def test_largest_component_matches_flood_fill(mask):
    out = largest_component(mask)
    sizes = components_oracle(mask)
    assert out.sum() == max(sizes)
    assert components_oracle(out) == [max(sizes)]
    assert not (out & ~mask).any()


# -- pipeline cross-checks --------------------------------------------------------

def test_lab_path_on_noisy_shaded_frames(identity):
    conf = ConfounderConfig(boundary_noise=0.2, clothing_bulk=1.2, elevation=10.0)
    seq = generate_sequence(identity, conf, 0.6, 25.0, seed=5)
    for frame, truth in zip(seq.frames, seq.masks):
        assert jaccard(segment_lab(frame, seq.background), truth).value >= 0.95
