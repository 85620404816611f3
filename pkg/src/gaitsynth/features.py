"""Per-cycle gait features: silhouette normalization, GEI, GEnI, augmentation.

Feature images are 50 rows x 30 columns with values in [0, 1]; their
row-major flattening is a 1500-vector.
"""

from dataclasses import dataclass
from itertools import product

import numpy as np

from .errors import ConfigError, CropTooLarge, EmptyCycle, EmptyForeground

HEIGHT = 50
WIDTH = 30
SIZE = HEIGHT * WIDTH
MIN_INTERIOR = (40, 24)

KINDS = ("GEI", "GEnI")
PROVENANCES = ("real-proxy", "synthetic")


@dataclass
class FeatureImage:
    values: np.ndarray
    kind: str = "GEI"

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (HEIGHT, WIDTH):
            raise ConfigError(f"feature image must be {HEIGHT}x{WIDTH}, got {self.values.shape}")
        if self.kind not in KINDS:
            raise ConfigError(f"unknown feature kind {self.kind!r}")


@dataclass
class FeatureVector:
    values: np.ndarray
    label: str
    provenance: str
    kind: str = "GEI"
    aug_id: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != (SIZE,):
            raise ConfigError(f"feature vector must have length {SIZE}")


def round_half_up(x):
    return np.floor(np.asarray(x, dtype=float) + 0.5).astype(int)


def _resize_nearest(mask, height, width):
    h, w = mask.shape
    rows = np.minimum(((np.arange(height) + 0.5) * h / height).astype(int), h - 1)
    cols = np.minimum(((np.arange(width) + 0.5) * w / width).astype(int), w - 1)
    return mask[rows[:, None], cols[None, :]]


def normalize_silhouette(mask):
    """Size-normalize and centre a silhouette on a 50x30 canvas.

    The foreground bounding box is scaled (nearest neighbour) to a height of
    50 rows, keeping its aspect ratio, and placed so that the foreground
    centroid column sits at the canvas centre. A box that fits the canvas is
    shifted just enough to stay fully inside; wider boxes lose the columns
    that fall outside.
    """
    mask = np.asarray(mask, dtype=bool)
    rows = np.flatnonzero(mask.any(axis=1))
    cols = np.flatnonzero(mask.any(axis=0))
    if rows.size == 0:
        raise EmptyForeground("cannot normalize an empty silhouette")
    box = mask[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]
    h, w = box.shape
    new_w = max(1, int(round_half_up(w * HEIGHT / h)))
    scaled = _resize_nearest(box, HEIGHT, new_w)

    centroid = np.nonzero(scaled)[1].mean() + 0.5
    left = int(round_half_up(WIDTH / 2.0 - centroid))
    if new_w <= WIDTH:
        left = min(max(left, 0), WIDTH - new_w)
    out = np.zeros((HEIGHT, WIDTH), dtype=bool)
    src0 = max(0, -left)
    src1 = min(new_w, WIDTH - left)
    out[:, left + src0:left + src1] = scaled[:, src0:src1]
    if not out.any():
        raise EmptyForeground("cropping to the canvas removed every foreground pixel")
    return out


def _stack(silhouettes):
    if len(silhouettes) == 0:
        raise EmptyCycle("cycle has no silhouettes")
    stack = np.asarray([np.asarray(s, dtype=bool) for s in silhouettes])
    if stack.shape[1:] != (HEIGHT, WIDTH):
        raise ConfigError(f"silhouettes must be normalized to {HEIGHT}x{WIDTH}")
    return stack


def gei(silhouettes):
    """Gait Energy Image: per-pixel mean of normalized binary silhouettes."""
    stack = _stack(silhouettes)
    return FeatureImage(stack.mean(axis=0), "GEI")


def binary_entropy(p):
    """Shannon entropy in bits of a Bernoulli(p) variable, with 0 log 0 = 0."""
    p = np.asarray(p, dtype=float)
    q = 1.0 - p
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(p > 0, p * np.log2(p), 0.0) - np.where(q > 0, q * np.log2(q), 0.0)
    return h


def geni(silhouettes):
    """Gait Entropy Image: per-pixel entropy of the foreground indicator."""
    stack = _stack(silhouettes)
    return FeatureImage(binary_entropy(stack.mean(axis=0)), "GEnI")


def resize_bilinear(image, height, width):
    """Bilinear resampling with pixel-centre alignment and edge clamping."""
    image = np.asarray(image, dtype=float)
    h, w = image.shape
    y = np.clip((np.arange(height) + 0.5) * h / height - 0.5, 0, h - 1)
    x = np.clip((np.arange(width) + 0.5) * w / width - 0.5, 0, w - 1)
    y0 = np.floor(y).astype(int)
    x0 = np.floor(x).astype(int)
    y1 = np.minimum(y0 + 1, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    fy = (y - y0)[:, None]
    fx = (x - x0)[None, :]
    top = image[y0][:, x0] * (1 - fx) + image[y0][:, x1] * fx
    bottom = image[y1][:, x0] * (1 - fx) + image[y1][:, x1] * fx
    return top * (1 - fy) + bottom * fy


def default_crop_grid(margins=(0, 2, 4)):
    """Symmetric (top, bottom, left, right) crops that keep a 40x24 interior."""
    grid = []
    for v, h in product(margins, margins):
        if v == 0 and h == 0:
            continue
        if HEIGHT - 2 * v >= MIN_INTERIOR[0] and WIDTH - 2 * h >= MIN_INTERIOR[1]:
            grid.append((v, v, h, h))
    return grid


def crop_resize(values, margins):
    top, bottom, left, right = margins
    if min(margins) < 0:
        raise CropTooLarge("crop margins must be non-negative")
    if HEIGHT - top - bottom < MIN_INTERIOR[0] or WIDTH - left - right < MIN_INTERIOR[1]:
        raise CropTooLarge(f"margins {tuple(margins)} leave less than a "
                           f"{MIN_INTERIOR[0]}x{MIN_INTERIOR[1]} interior")
    interior = values[top:HEIGHT - bottom, left:WIDTH - right]
    return np.clip(resize_bilinear(interior, HEIGHT, WIDTH), 0.0, 1.0)


def flip(feature):
    return FeatureImage(feature.values[:, ::-1].copy(), feature.kind)


def augment(feature, crop_margins=()):
    """Originals and horizontal flips, each uncropped and under every crop.

    Output order: for each of (original, flipped), the uncropped image
    followed by one image per entry of ``crop_margins``.
    """
    crops = [tuple(int(m) for m in c) for c in crop_margins]
    for c in crops:
        if len(c) != 4:
            raise CropTooLarge("crop margins are (top, bottom, left, right)")
    out = []
    for base in (feature, flip(feature)):
        out.append(FeatureImage(base.values.copy(), base.kind))
        for c in crops:
            out.append(FeatureImage(crop_resize(base.values, c), base.kind))
    return out


def flatten(feature, label, provenance, aug_id=0):
    return FeatureVector(feature.values.reshape(-1).copy(), label, provenance, feature.kind, aug_id)


def unflatten(vector):
    values = getattr(vector, "values", vector)
    kind = getattr(vector, "kind", "GEI")
    return FeatureImage(np.asarray(values, dtype=float).reshape(HEIGHT, WIDTH), kind)


def cycle_features(masks, label, provenance, kinds=("GEI",), crop_margins=None):
    """Feature vectors for one cycle of raw masks, augmentations included.

    ``crop_margins=None`` disables augmentation (a single vector per kind).
    """
    normalized = [normalize_silhouette(m) for m in masks]
    out = []
    for kind in kinds:
        image = gei(normalized) if kind == "GEI" else geni(normalized)
        images = [image] if crop_margins is None else augment(image, crop_margins)
        out.extend(flatten(img, label, provenance, aug_id=i) for i, img in enumerate(images))
    return out
