"""Silhouette extraction.

Two routes produce a boolean foreground mask from an RGB frame:

* realistic frames: LAB background subtraction, then a 1-D two-means split
  of the difference magnitudes (:func:`segment_lab`);
* synthetic frames rendered on a uniform colour: :func:`chroma_key`.

Images are numpy arrays: RGB frames ``(H, W, 3)`` uint8, grey images
``(H, W)`` float, masks ``(H, W)`` bool.
"""

import numpy as np
from scipy import ndimage

from .errors import DegenerateImage, DimensionMismatch, EmptyForeground

# D65 reference white, XYZ scaled so Y = 1
_WHITE = np.array([0.95047, 1.0, 1.08883])
_RGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_XYZ_TO_RGB = np.linalg.inv(_RGB_TO_XYZ)
_EPS = 216.0 / 24389.0
_KAPPA = 24389.0 / 27.0


def _srgb_to_linear(c):
    return np.where(c <= 0.04045, c / 12.92, ((c + 0.055) / 1.055) ** 2.4)


def _linear_to_srgb(c):
    c = np.clip(c, 0.0, None)
    return np.where(c <= 0.0031308, 12.92 * c, 1.055 * c ** (1 / 2.4) - 0.055)


def rgb_to_lab(image):
    """CIE L*a*b* (D65) of an 8-bit sRGB image; L in [0, 100]."""
    rgb = np.asarray(image, dtype=float) / 255.0
    xyz = _srgb_to_linear(rgb) @ _RGB_TO_XYZ.T / _WHITE
    f = np.where(xyz > _EPS, np.cbrt(xyz), (_KAPPA * xyz + 16.0) / 116.0)
    L = 116.0 * f[..., 1] - 16.0
    a = 500.0 * (f[..., 0] - f[..., 1])
    b = 200.0 * (f[..., 1] - f[..., 2])
    return np.stack([L, a, b], axis=-1)


def lab_to_rgb(lab):
    """Inverse of :func:`rgb_to_lab`, returning float RGB in [0, 255]."""
    lab = np.asarray(lab, dtype=float)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    f = np.stack([fx, fy, fz], axis=-1)
    xyz = np.where(f ** 3 > _EPS, f ** 3, (116.0 * f - 16.0) / _KAPPA) * _WHITE
    return np.clip(_linear_to_srgb(xyz @ _XYZ_TO_RGB.T), 0.0, 1.0) * 255.0


def background_subtract(frame, background):
    """Per-pixel Euclidean distance between two RGB images in LAB space."""
    frame = np.asarray(frame)
    background = np.asarray(background)
    if frame.shape != background.shape:
        raise DimensionMismatch(f"frame {frame.shape} vs background {background.shape}")
    return np.linalg.norm(rgb_to_lab(frame) - rgb_to_lab(background), axis=-1)


def two_means(values, max_iter=100):
    """1-D Lloyd iterations seeded at min and max.

    Returns ``(low centroid, high centroid, threshold)``. Values strictly
    above the threshold belong to the high cluster.
    """
    v = np.asarray(values, dtype=float).ravel()
    lo, hi = v.min(), v.max()
    if not hi > lo:
        raise DegenerateImage("constant intensities have no two-class structure")
    threshold = 0.5 * (lo + hi)
    assign = v > threshold
    for _ in range(max_iter):
        lo, hi = v[~assign].mean(), v[assign].mean()
        threshold = 0.5 * (lo + hi)
        new = v > threshold
        if np.array_equal(new, assign):
            break
        assign = new
    return lo, hi, threshold


def cluster_threshold(gray):
    """Split a difference image into foreground (high) and background."""
    gray = np.asarray(gray, dtype=float)
    _, _, threshold = two_means(gray)
    return gray > threshold


def chroma_key(frame, background_color, tolerance=30):
    """Foreground where any channel differs from the key colour by > tolerance."""
    frame = np.asarray(frame, dtype=int)
    diff = np.abs(frame - np.asarray(background_color, dtype=int)).max(axis=-1)
    return diff > tolerance


def largest_component(mask):
    """Keep the largest 8-connected foreground component.

    Size ties go to the component whose bounding box has the smallest
    top-left corner in row-major order.
    """
    mask = np.asarray(mask, dtype=bool)
    if not mask.any():
        raise EmptyForeground("mask has no foreground pixels")
    labels, n = ndimage.label(mask, structure=np.ones((3, 3), dtype=int))
    if n == 1:
        return mask.copy()
    sizes = np.bincount(labels.ravel())[1:]
    boxes = ndimage.find_objects(labels)
    best = min(range(n), key=lambda i: (-sizes[i], boxes[i][0].start, boxes[i][1].start))
    return labels == best + 1


def segment_lab(frame, background, keep_largest=True):
    """LAB route: difference image, two-means threshold, optional cleanup."""
    mask = cluster_threshold(background_subtract(frame, background))
    return largest_component(mask) if keep_largest else mask


def segment_chroma(frame, background_color, tolerance=30, keep_largest=False):
    mask = chroma_key(frame, background_color, tolerance)
    return largest_component(mask) if keep_largest else mask
