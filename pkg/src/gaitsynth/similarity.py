"""Jaccard agreement between binary silhouettes and per-subject summaries."""

from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, EmptyCycle, EmptyForeground, EmptyInput


@dataclass
class JaccardResult:
    value: float
    intersection: int
    union: int
    shift: tuple = (0, 0)


@dataclass
class SimilarityStats:
    subject: str
    samples: list = field(repr=False)
    min: float
    q1: float
    median: float
    q3: float
    max: float

    @property
    def n(self):
        return len(self.samples)


def jaccard(a, b):
    """Intersection over union of two masks of equal shape.

    Two empty masks score 1 (identical sets); empty versus non-empty scores 0.
    """
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise DimensionMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")
    inter = int(np.count_nonzero(a & b))
    union = int(np.count_nonzero(a | b))
    value = 1.0 if union == 0 else inter / union
    return JaccardResult(value, inter, union, (0, 0))


def centroid(mask):
    rows, cols = np.nonzero(mask)
    if rows.size == 0:
        raise EmptyForeground("mask has no foreground pixels")
    return rows.mean(), cols.mean()


def translate(mask, dx, dy):
    """Shift a mask by ``dx`` columns and ``dy`` rows, filling with background."""
    mask = np.asarray(mask, dtype=bool)
    h, w = mask.shape
    out = np.zeros_like(mask)
    if abs(dx) >= w or abs(dy) >= h:
        return out
    out[max(dy, 0):h + min(dy, 0), max(dx, 0):w + min(dx, 0)] = \
        mask[max(-dy, 0):h - max(dy, 0), max(-dx, 0):w - max(dx, 0)]
    return out


def jaccard_aligned(a, b):
    """Jaccard index after moving ``b``'s centroid onto ``a``'s.

    The shift ``(dx, dy)`` applied to ``b`` is rounded half-up to whole
    pixels and reported in the result.
    """
    a = np.asarray(a, dtype=bool)
    b = np.asarray(b, dtype=bool)
    if a.shape != b.shape:
        raise DimensionMismatch(f"mask shapes differ: {a.shape} vs {b.shape}")
    ra, ca = centroid(a)
    rb, cb = centroid(b)
    dx = int(np.floor(ca - cb + 0.5))
    dy = int(np.floor(ra - rb + 0.5))
    result = jaccard(a, translate(b, dx, dy))
    result.shift = (dx, dy)
    return result


def phase_pairs(len_a, len_b):
    """Index pairs ``(i_a, j_b)`` matching equal normalized phase."""
    if len_a == 0 or len_b == 0:
        raise EmptyCycle("cannot pair frames of an empty cycle")
    idx = np.floor(np.arange(len_b) * len_a / len_b + 0.5).astype(int)
    idx = np.minimum(idx, len_a - 1)
    return [(int(i), int(j)) for j, i in enumerate(idx)]


def phase_pair_silhouettes(cycle_a, cycle_b):
    """Pair frame j of ``cycle_b`` with frame round(j * len_a / len_b) of ``cycle_a``.

    Cycles are sequences of masks or objects with a ``silhouettes`` list.
    """
    a = list(getattr(cycle_a, "silhouettes", cycle_a))
    b = list(getattr(cycle_b, "silhouettes", cycle_b))
    return [(a[i], b[j]) for i, j in phase_pairs(len(a), len(b))]


def similarity_stats(values, subject):
    """Order statistics with linearly interpolated quartiles."""
    v = np.asarray(list(values), dtype=float)
    if v.size == 0:
        raise EmptyInput(f"no Jaccard values for subject {subject!r}")
    q = np.quantile(v, [0.0, 0.25, 0.5, 0.75, 1.0], method="linear")
    return SimilarityStats(subject, sorted(v.tolist()), *map(float, q))


def cross_cycle_values(cycles, aligned=True):
    """Jaccard values over all frame pairs of all distinct cycle pairs.

    Returns a list of ``(cycle_a, cycle_b, frame_a, frame_b, JaccardResult)``
    with frame indices local to each cycle.
    """
    fn = jaccard_aligned if aligned else jaccard
    out = []
    for p in range(len(cycles)):
        for q in range(p + 1, len(cycles)):
            a = list(getattr(cycles[p], "silhouettes", cycles[p]))
            b = list(getattr(cycles[q], "silhouettes", cycles[q]))
            for i, j in phase_pairs(len(a), len(b)):
                out.append((p, q, i, j, fn(a[i], b[j])))
    return out
