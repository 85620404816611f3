"""Glue between the stages: render, segment, split into cycles, featurize.

Two render proxies stand in for the two data provenances:

* ``real-proxy``: shaded frames with bulkier clothing, a raised camera and
  boundary noise, segmented by LAB background subtraction plus
  largest-component cleanup;
* ``synthetic``: clean frames at eye level, segmented by chroma key.
"""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace

import numpy as np

from . import features as feat
from . import segmentation as seg
from .errors import ConfigError
from .gait_cycle import detect_cycles
from .walker import ConfounderConfig, generate_sequence, stride_frequency

PROXY_CONFOUNDERS = {
    "real-proxy": ConfounderConfig(clothing_bulk=1.2, elevation=10.0, boundary_noise=0.2),
    "synthetic": ConfounderConfig(),
}
PROXY_SEGMENTATION = {"real-proxy": "lab", "synthetic": "chroma"}
SEGMENTATION_METHODS = ("lab", "chroma")


def ordered_map(fn, items, jobs=1):
    """``map`` that optionally fans out to processes; output order is input order."""
    items = list(items)
    if jobs > 1 and len(items) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(items))) as ex:
            return list(ex.map(fn, items))
    return [fn(x) for x in items]


def segment_frames(frames, background, method, tolerance=30, keep_largest=None):
    """Masks for a stack of RGB frames with the chosen extraction route."""
    if method not in SEGMENTATION_METHODS:
        raise ConfigError(f"unknown segmentation method {method!r}")
    if method == "lab":
        keep = True if keep_largest is None else keep_largest
        return np.array([seg.segment_lab(f, background, keep) for f in frames])
    keep = False if keep_largest is None else keep_largest
    color = np.asarray(background)[0, 0]
    return np.array([seg.segment_chroma(f, color, tolerance, keep) for f in frames])


def proxy_confounders(mode, speed=5.0, **overrides):
    if mode not in PROXY_CONFOUNDERS:
        raise ConfigError(f"unknown proxy mode {mode!r}")
    return replace(PROXY_CONFOUNDERS[mode], speed=speed, **overrides)


def render_proxy(identity, mode, duration, fps=25.0, seed=0, speed=5.0, camera=None):
    """Render one sequence in a proxy mode and segment it; returns (sequence, masks)."""
    confounders = proxy_confounders(mode, speed)
    sequence = generate_sequence(identity, confounders, duration, fps, seed, camera)
    masks = segment_frames(sequence.frames, sequence.background, PROXY_SEGMENTATION[mode])
    return sequence, masks


def masks_to_features(masks, label, provenance, fps=25.0, kinds=("GEI",), crop_margins=None,
                      **cycle_kwargs):
    """Detect cycles in ``masks`` and return (cycles, feature vectors)."""
    cycles, _, _ = detect_cycles(masks, frame_rate=fps, **cycle_kwargs)
    vectors = []
    for c in cycles:
        vectors.extend(feat.cycle_features(c.silhouettes, label, provenance, kinds, crop_margins))
    return cycles, vectors


def _proxy_task(args):
    identity, mode, n_cycles, fps, seed, speed, crop_margins = args
    # one spare cycle plus slack for the first detected peak
    duration = (n_cycles + 1.5) / stride_frequency(speed, identity.cadence_bias)
    _, masks = render_proxy(identity, mode, duration, fps, seed, speed)
    cycles, _, _ = detect_cycles(masks, frame_rate=fps)
    vectors = []
    for c in cycles[:n_cycles]:
        vectors.extend(feat.cycle_features(c.silhouettes, identity.name, mode, ("GEI",), crop_margins))
    return vectors


def proxy_feature_sets(identities, n_cycles, fps=25.0, seed=0, speed=5.0, crop_margins=None,
                       jobs=1):
    """GEI feature vectors of every identity in both proxy modes.

    Each sequence is long enough for ``n_cycles`` gait cycles and at most
    that many are kept. Returns ``{"real-proxy": [...], "synthetic": [...]}``.
    Each (identity, mode) sequence is seeded by ``(seed, identity index,
    mode index)``.
    """
    modes = tuple(PROXY_CONFOUNDERS)
    tasks = []
    for m_index, mode in enumerate(modes):
        for i, ident in enumerate(identities):
            key = int(np.random.SeedSequence([seed, i, m_index]).generate_state(1)[0])
            tasks.append((ident, mode, n_cycles, fps, key, speed, crop_margins))
    results = ordered_map(_proxy_task, tasks, jobs)
    n = len(identities)
    return {mode: [v for r in results[m * n:(m + 1) * n] for v in r] for m, mode in enumerate(modes)}
