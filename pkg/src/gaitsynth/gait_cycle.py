"""Gait-cycle segmentation from the lower-body pixel-count signal.

The number of foreground pixels in the lower half of the body peaks at every
full-stride stance, i.e. twice per gait cycle. Cycles are delimited by every
second peak.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, EmptyForeground, NoCyclesDetected


@dataclass
class PixelCountSignal:
    values: np.ndarray
    frame_rate: float

    def __len__(self):
        return len(self.values)


@dataclass
class GaitCycle:
    """Half-open frame range ``[start_frame, end_frame)`` and its masks."""

    start_frame: int
    end_frame: int
    silhouettes: list = field(default_factory=list, repr=False)

    def __post_init__(self):
        if self.end_frame <= self.start_frame:
            raise ConfigError("cycle must span at least one frame")

    def __len__(self):
        return self.end_frame - self.start_frame


def _lower_rows(mask, lower_fraction):
    rows = np.flatnonzero(mask.any(axis=1))
    if rows.size == 0:
        raise EmptyForeground("frame has no foreground pixels")
    top, bottom = rows[0], rows[-1]
    n = int(np.ceil((bottom - top + 1) * lower_fraction - 1e-9))
    return bottom + 1 - n, bottom + 1


def pixel_count_signal(masks, lower_fraction=0.5, frame_rate=25.0):
    """Foreground count in the bottom ``lower_fraction`` of each frame's bounding box."""
    if len(masks) == 0:
        raise EmptyForeground("no frames")
    if not 0.0 < lower_fraction <= 1.0:
        raise ConfigError("lower_fraction must lie in (0, 1]")
    counts = np.empty(len(masks), dtype=np.int64)
    for i, m in enumerate(masks):
        m = np.asarray(m, dtype=bool)
        r0, r1 = _lower_rows(m, lower_fraction)
        counts[i] = np.count_nonzero(m[r0:r1])
    return PixelCountSignal(counts, frame_rate)


def smooth(signal, window=5):
    """Centred moving average with edge replication."""
    if window < 1 or window % 2 == 0:
        raise ConfigError("smoothing window must be a positive odd integer")
    values = np.asarray(signal.values, dtype=float)
    if window == 1:
        return PixelCountSignal(values.copy(), signal.frame_rate)
    half = window // 2
    padded = np.pad(values, half, mode="edge")
    out = np.convolve(padded, np.full(window, 1.0 / window), mode="valid")
    return PixelCountSignal(out, signal.frame_rate)


def _local_maxima(x):
    """Strict local maxima; a plateau reports its first index."""
    peaks = []
    i, n = 1, len(x)
    while i < n - 1:
        if x[i] > x[i - 1]:
            k = i
            while k + 1 < n and x[k + 1] == x[i]:
                k += 1
            if k + 1 < n and x[k + 1] < x[i]:
                peaks.append(i)
            i = k + 1
        else:
            i += 1
    return peaks


def prominence(x, i):
    """Height of ``x[i]`` above the higher of its two flanking minima.

    Each flank extends until a strictly higher sample or the signal end.
    """
    h = x[i]
    left = i
    lmin = h
    while left > 0 and x[left - 1] <= h:
        left -= 1
        lmin = min(lmin, x[left])
    right = i
    rmin = h
    while right < len(x) - 1 and x[right + 1] <= h:
        right += 1
        rmin = min(rmin, x[right])
    return h - max(lmin, rmin)


def detect_peaks(signal, min_distance=1, min_prominence=0.0):
    """Peak indices, ascending.

    Local maxima are kept if their prominence reaches ``min_prominence``, then
    thinned highest-first so that survivors are at least ``min_distance``
    frames apart (height ties favour the earlier peak).
    """
    if min_distance < 1:
        raise ConfigError("min_distance must be >= 1")
    x = np.asarray(getattr(signal, "values", signal), dtype=float)
    candidates = [i for i in _local_maxima(x) if prominence(x, i) >= min_prominence]
    kept = []
    for i in sorted(candidates, key=lambda i: (-x[i], i)):
        if all(abs(i - k) >= min_distance for k in kept):
            kept.append(i)
    return sorted(kept)


def cycles_from_peaks(peaks):
    """Every-second-peak rule: cycle i spans ``[peaks[2i], peaks[2i + 2])``."""
    peaks = list(peaks)
    if len(peaks) < 3:
        raise NoCyclesDetected(f"need at least 3 peaks, found {len(peaks)}")
    bounds = peaks[::2]
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


def default_min_prominence(smoothed, fraction=0.02):
    """``fraction`` of the signal's dynamic range ``[0, max]``."""
    values = np.asarray(smoothed.values, dtype=float)
    return fraction * float(values.max()) if values.size else 0.0


def detect_cycles(masks, frame_rate=25.0, lower_fraction=0.5, window=5,
                  min_distance=None, min_prominence=None, prominence_fraction=0.02):
    """Split a mask sequence into :class:`GaitCycle` objects.

    Returns ``(cycles, raw signal, smoothed signal)``.
    """
    raw = pixel_count_signal(masks, lower_fraction, frame_rate)
    smoothed = smooth(raw, window)
    if min_distance is None:
        min_distance = max(1, int(round(0.25 * frame_rate)))
    if min_prominence is None:
        min_prominence = default_min_prominence(smoothed, prominence_fraction)
    peaks = detect_peaks(smoothed, min_distance, min_prominence)
    ranges = cycles_from_peaks(peaks)
    cycles = [GaitCycle(a, b, [masks[i] for i in range(a, b)]) for a, b in ranges]
    return cycles, raw, smoothed
