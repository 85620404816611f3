import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from gaitsynth.errors import DimensionMismatch, EmptyCycle, EmptyInput
from gaitsynth.gait_cycle import GaitCycle
from gaitsynth.similarity import (cross_cycle_values, jaccard, jaccard_aligned, phase_pair_silhouettes,
                                  phase_pairs, similarity_stats, translate)

masks = arrays(bool, (8, 9))


def pixel_set(m):
    return {(r, c) for r in range(m.shape[0]) for c in range(m.shape[1]) if m[r, c]}


def disk(shape, centre, radius):
    yy, xx = np.mgrid[0:shape[0], 0:shape[1]] + 0.5
    return (yy - centre[0]) ** 2 + (xx - centre[1]) ** 2 <= radius ** 2


def quantile_oracle(values, q):
    v = sorted(values)
    pos = q * (len(v) - 1)
    lo = int(pos)
    hi = min(lo + 1, len(v) - 1)
    return v[lo] + (pos - lo) * (v[hi] - v[lo])


# -- jaccard -------------------------------------------------------------------

def test_jaccard_examples():
    a = np.zeros((4, 5), dtype=bool)
    a[1:3, 1:3] = True
    assert jaccard(a, a).value == 1.0
    assert jaccard(a, ~a).value == 0.0
    r = jaccard(a, translate(a, 1, 0))
    assert (r.intersection, r.union) == (2, 6)
    assert r.value == pytest.approx(1 / 3)


def test_empty_conventions_and_shape_check():
    z = np.zeros((3, 3), dtype=bool)
    o = np.ones((3, 3), dtype=bool)
    assert jaccard(z, z).value == 1.0
    assert jaccard(z, o).value == 0.0
    with pytest.raises(DimensionMismatch):
        jaccard(z, np.zeros((3, 4), dtype=bool))


@settings(max_examples=100)
@given(masks, masks)
def test_jaccard_matches_set_oracle_and_is_symmetric(a, b):
    sa, sb = pixel_set(a), pixel_set(b)
    expected = 1.0 if not (sa | sb) else len(sa & sb) / len(sa | sb)
    r = jaccard(a, b)
    assert r.value == expected
    assert jaccard(b, a).value == r.value
    if sa:
        assert (r.value == 1.0) == (sa == sb)


@settings(max_examples=60)
@given(masks.filter(lambda m: m.any() and not m.all()), masks, st.data())
def test_extra_pixels_outside_a_lower_the_index(a, b, data):
    outside = np.argwhere(~a & ~b)
    if len(outside) == 0:
        return
    r, c = outside[data.draw(st.integers(0, len(outside) - 1))]
    b2 = b.copy()
    b2[r, c] = True
    if jaccard(a, b).value > 0:
        assert jaccard(a, b2).value < jaccard(a, b).value


# -- alignment -----------------------------------------------------------------

def test_translation_is_compensated():
    a = np.zeros((20, 20), dtype=bool)
    a[5:12, 6:10] = True
    a[5, 10] = True
    b = translate(a, 3, -2)
    r = jaccard_aligned(a, b)
    assert r.value == 1.0 and r.shift == (-3, 2)


def test_aligned_masks_need_no_shift():
    a = disk((15, 15), (7.5, 7.5), 4)
    b = disk((15, 15), (7.5, 7.5), 3)
    r = jaccard_aligned(a, b)
    assert r.shift == (0, 0) and r.value == jaccard(a, b).value


def test_concentric_disks_area_ratio():
    a = disk((200, 200), (100, 100), 60)
    b = disk((200, 200), (100, 100), 66)
    assert jaccard_aligned(a, b).value == pytest.approx(1 / 1.21, abs=0.02)


@settings(max_examples=60)
@given(arrays(bool, (6, 6)).filter(lambda m: m.any()), st.integers(-4, 4), st.integers(-4, 4))
def test_aligned_index_undoes_in_frame_shifts(blob, dx, dy):
    a = np.zeros((16, 16), dtype=bool)
    a[5:11, 5:11] = blob
    assert jaccard_aligned(a, translate(a, dx, dy)).value == 1.0


# -- phase pairing -------------------------------------------------------------

def test_phase_pairing():
    assert phase_pairs(5, 5) == [(i, i) for i in range(5)]
    assert phase_pairs(30, 15) == [(2 * j, j) for j in range(15)]
    assert all(0 <= i < 7 for i, _ in phase_pairs(7, 23))
    with pytest.raises(EmptyCycle):
        phase_pairs(0, 3)


def test_cycle_paired_with_itself(clean_sequence):
    c = GaitCycle(0, 20, list(clean_sequence.masks[:20]))
    assert all(jaccard(a, b).value == 1.0 for a, b in phase_pair_silhouettes(c, c))


def test_cross_cycle_values_enumerates_all_pairs():
    m = [np.eye(4, dtype=bool)] * 3
    cycles = [m, m[:2], m]
    out = cross_cycle_values(cycles)
    # pairs (0,1): 2 frames, (0,2): 3, (1,2): 3
    assert len(out) == 8
    assert {(p, q) for p, q, *_ in out} == {(0, 1), (0, 2), (1, 2)}


# -- statistics ----------------------------------------------------------------

def test_stats_examples():
    s = similarity_stats([0.5], "s01")
    assert (s.min, s.q1, s.median, s.q3, s.max, s.n) == (0.5, 0.5, 0.5, 0.5, 0.5, 1)
    assert similarity_stats([0.1, 0.2, 0.3, 0.4], "s01").median == pytest.approx(0.25)
    with pytest.raises(EmptyInput):
        similarity_stats([], "s01")


@given(st.lists(st.floats(0, 1), min_size=1, max_size=25), st.randoms())
def test_stats_match_oracle_and_ignore_order(values, rnd):
    s = similarity_stats(values, "x")
    shuffled = list(values)
    rnd.shuffle(shuffled)
    t = similarity_stats(shuffled, "x")
    got = (s.min, s.q1, s.median, s.q3, s.max)
    assert got == (t.min, t.q1, t.median, t.q3, t.max)
    assert got == pytest.approx([quantile_oracle(values, q) for q in (0, 0.25, 0.5, 0.75, 1)])
