"""PCA projection, linear one-vs-rest SVMs and the train/test protocol.

Conditions pair a training source with a test source drawn from real-proxy
(R) and synthetic (S) feature vectors:

========================  ==================================  =====================
condition                 train                               test
========================  ==================================  =====================
``R-R``                   stratified 70% of R                 remaining 30% of R
``S-S``                   stratified 70% of S                 remaining 30% of S
``R-S``                   all R                               all S
``S-R``                   all S                               all R
``70%R+S-30%R``           stratified 70% of R plus all S      remaining 30% of R
``30%R+S-70%R``           stratified 30% of R plus all S      remaining 70% of R
========================  ==================================  =====================
"""

from __future__ import annotations

import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ConfigError,
    EmptyClass,
    InsufficientComponents,
    InsufficientSamples,
    LabelMismatch,
    RankDeficientWarning,
    SingleClass,
)
from .features import HEIGHT, WIDTH

CONDITIONS = ("R-R", "S-S", "R-S", "S-R", "70%R+S-30%R", "30%R+S-70%R")

RANK_RTOL = 1e-10


# ---------------------------------------------------------------------------
# PCA


@dataclass
class PcaModel:
    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    rank_deficient: bool = False

    @property
    def k(self):
        return len(self.eigenvalues)


def _fix_signs(components):
    """Make each component's largest-magnitude entry positive."""
    if components.size == 0:
        return components
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(len(components)), idx])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


def pca_spectrum(data):
    """Mean, all non-negative eigenvalues (descending) and matching components.

    Uses the n x n Gram matrix when there are fewer samples than dimensions.
    """
    X = np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InsufficientSamples("PCA needs at least two samples")
    n, d = X.shape
    mean = X.mean(axis=0)
    Xc = X - mean
    if n < d:
        evals, evecs = np.linalg.eigh(Xc @ Xc.T / (n - 1))
        evals, evecs = evals[::-1], evecs[:, ::-1]
        evals = np.clip(evals, 0.0, None)
        top = evals[0]
        keep = evals > top * RANK_RTOL if top > 0 else np.zeros_like(evals, dtype=bool)
        comps = (Xc.T @ evecs[:, keep]) / np.sqrt((n - 1) * evals[keep])
        comps = comps.T
        evals = evals[keep]
    else:
        evals, evecs = np.linalg.eigh(Xc.T @ Xc / (n - 1))
        evals, evecs = np.clip(evals[::-1], 0.0, None), evecs[:, ::-1]
        top = evals[0]
        keep = evals > top * RANK_RTOL if top > 0 else np.zeros_like(evals, dtype=bool)
        comps = evecs[:, keep].T
        evals = evals[keep]
    return mean, evals, _fix_signs(comps)


def pca_fit(data, k):
    """Top-``k`` principal components of the rows of ``data``.

    If the data's numerical rank is below ``k`` the model keeps only the
    achievable components, sets ``rank_deficient`` and emits a
    :class:`RankDeficientWarning`.
    """
    X = np.asarray(data, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise InsufficientSamples("PCA needs at least two samples")
    n, d = X.shape
    if not 0 <= k <= min(n - 1, d):
        raise InsufficientSamples(f"k={k} exceeds min(n-1, d)={min(n - 1, d)}")
    mean, evals, comps = pca_spectrum(X)
    deficient = len(evals) < k
    if deficient:
        warnings.warn(f"requested {k} components, data rank is {len(evals)}", RankDeficientWarning,
                      stacklevel=2)
    k_used = min(k, len(evals))
    return PcaModel(mean, comps[:k_used].copy(), evals[:k_used].copy(), deficient)


def pca_project(model, vectors):
    """Coefficients of the centred vector(s) on the model's components."""
    return (np.asarray(vectors, dtype=float) - model.mean) @ model.components.T


def pca_reconstruct(model, coefficients):
    return np.asarray(coefficients, dtype=float) @ model.components + model.mean


def truncate(model, k):
    k = min(k, model.k)
    return PcaModel(model.mean, model.components[:k], model.eigenvalues[:k], model.rank_deficient)


def eigen_images(model, count=9):
    """First ``count`` components as 50x30 images rescaled to [0, 1].

    A constant component maps to a uniform 0.5 image.
    """
    if model.k < count:
        raise InsufficientComponents(f"model has {model.k} components, {count} requested")
    out = []
    for c in model.components[:count]:
        img = c.reshape(HEIGHT, WIDTH)
        lo, hi = img.min(), img.max()
        out.append(np.full_like(img, 0.5) if hi == lo else (img - lo) / (hi - lo))
    return out


def image_grid(images, columns=3):
    """Tile equally sized images row-major into one array."""
    rows = -(-len(images) // columns)
    h, w = images[0].shape
    grid = np.zeros((rows * h, columns * w))
    for i, img in enumerate(images):
        r, c = divmod(i, columns)
        grid[r * h:(r + 1) * h, c * w:(c + 1) * w] = img
    return grid


# ---------------------------------------------------------------------------
# SVM


@dataclass
class SvmModel:
    classes: list
    weights: np.ndarray
    biases: np.ndarray
    scale_mean: np.ndarray
    scale_std: np.ndarray
    reg_weight: float
    epochs: int

    def standardize(self, X):
        return (np.asarray(X, dtype=float) - self.scale_mean) / self.scale_std

    def decision_function(self, X):
        return self.standardize(X) @ self.weights.T + self.biases


def svm_train(features, labels, reg_weight=1e-2, epochs=200, classes=None):
    """One-vs-rest linear SVMs by full-batch subgradient descent.

    Each binary problem minimizes ``reg_weight/2 |w|^2 + mean(hinge)`` with
    step ``1 / (reg_weight * t)`` at epoch ``t``; the bias is not
    regularized. Features are standardized per dimension first.

    ``classes`` may list labels absent from the training set; passing one
    raises :class:`EmptyClass`.
    """
    X = np.asarray(features, dtype=float)
    y = np.asarray(labels)
    if X.ndim != 2 or len(X) != len(y):
        raise ConfigError("features must be (n, d) with one label per row")
    if not reg_weight > 0 or epochs < 1:
        raise ConfigError("reg_weight must be > 0 and epochs >= 1")
    present = sorted(set(y.tolist()))
    if classes is None:
        classes = present
    else:
        classes = sorted(classes)
        missing = set(classes) - set(present)
        if missing:
            raise EmptyClass(f"no training samples for classes {sorted(missing)}")
    if len(classes) < 2:
        raise SingleClass("need at least two classes")

    mean = X.mean(axis=0)
    std = X.std(axis=0)
    std[std == 0] = 1.0
    Z = (X - mean) / std
    n, d = Z.shape
    Y = np.where(y[:, None] == np.array(classes)[None, :], 1.0, -1.0)
    W = np.zeros((len(classes), d))
    b = np.zeros(len(classes))
    for t in range(1, epochs + 1):
        eta = 1.0 / (reg_weight * t)
        margins = Y * (Z @ W.T + b)
        active = Y * (margins < 1.0)
        grad_w = reg_weight * W - active.T @ Z / n
        grad_b = -active.sum(axis=0) / n
        W -= eta * grad_w
        b -= eta * grad_b
    return SvmModel(list(classes), W, b, mean, std, reg_weight, epochs)


def svm_predict(model, vectors):
    """Highest-scoring label per row; exact ties go to the smallest label."""
    X = np.asarray(vectors, dtype=float)
    single = X.ndim == 1
    scores = model.decision_function(np.atleast_2d(X))
    labels = [model.classes[i] for i in np.argmax(scores, axis=1)]
    return labels[0] if single else labels


# ---------------------------------------------------------------------------
# experiments


@dataclass
class ExperimentSpec:
    conditions: tuple = CONDITIONS
    component_counts: tuple = (5, 10, 20, 50)
    split_seed: int = 0
    reg_weight: float = 1e-2
    epochs: int = 200
    kind: str = "GEI"

    def __post_init__(self):
        self.conditions = tuple(self.conditions)
        self.component_counts = tuple(int(k) for k in self.component_counts)
        bad = [c for c in self.conditions if c not in CONDITIONS]
        if bad:
            raise ConfigError(f"unknown conditions {bad}; expected a subset of {list(CONDITIONS)}")
        ks = self.component_counts
        if not ks or any(k <= 0 for k in ks) or list(ks) != sorted(set(ks)):
            raise ConfigError("component_counts must be positive and strictly ascending")


@dataclass
class ExperimentRow:
    condition: str
    k: int
    k_used: int
    train_n: int
    test_n: int
    accuracy: float
    confusion: np.ndarray = field(repr=False)
    classes: list = field(repr=False)


@dataclass
class ExperimentResult:
    rows: list

    def accuracy(self, condition, k):
        for r in self.rows:
            if r.condition == condition and r.k == k:
                return r.accuracy
        raise KeyError((condition, k))


class _Pool:
    """Feature vectors of one provenance grouped by source cycle.

    A group starts at every ``aug_id == 0`` vector; augmented copies stay with
    their source so they never straddle a train/test split.
    """

    def __init__(self, vectors, kind):
        vecs = [v for v in vectors if v.kind == kind]
        self.X = np.array([v.values for v in vecs]) if vecs else np.zeros((0, HEIGHT * WIDTH))
        self.labels = np.array([v.label for v in vecs])
        self.original = np.array([v.aug_id == 0 for v in vecs], dtype=bool)
        group = np.cumsum(self.original) - 1
        if len(vecs) and not vecs[0].aug_id == 0:
            raise ConfigError("feature archive must start with an un-augmented vector")
        self.group = group
        self.group_labels = self.labels[self.original]

    def rows(self, groups, originals_only):
        sel = np.isin(self.group, groups)
        if originals_only:
            sel &= self.original
        return np.flatnonzero(sel)


def stratified_split(labels, fraction, seed):
    """Deterministic per-class shuffle; returns (train, test) index arrays."""
    labels = np.asarray(labels)
    train, test = [], []
    for c_index, c in enumerate(sorted(set(labels.tolist()))):
        members = np.flatnonzero(labels == c)
        if len(members) < 2:
            raise InsufficientSamples(f"class {c!r} needs at least two samples to split")
        perm = np.random.default_rng([int(seed), c_index]).permutation(len(members))
        n_train = int(np.floor(fraction * len(members) + 0.5))
        n_train = min(max(n_train, 1), len(members) - 1)
        train.extend(members[perm[:n_train]])
        test.extend(members[perm[n_train:]])
    return np.sort(np.array(train, dtype=int)), np.sort(np.array(test, dtype=int))


def _condition_sets(condition, real, synth, seed):
    all_r = np.arange(len(real.group_labels))
    all_s = np.arange(len(synth.group_labels))
    if condition in ("R-R", "70%R+S-30%R"):
        tr, te = stratified_split(real.group_labels, 0.7, seed)
    elif condition == "30%R+S-70%R":
        tr, te = stratified_split(real.group_labels, 0.3, seed)
    elif condition == "S-S":
        tr, te = stratified_split(synth.group_labels, 0.7, seed)
    if condition == "R-R":
        train = [(real, tr)]
        test = (real, te)
    elif condition == "S-S":
        train = [(synth, tr)]
        test = (synth, te)
    elif condition == "R-S":
        train, test = [(real, all_r)], (synth, all_s)
    elif condition == "S-R":
        train, test = [(synth, all_s)], (real, all_r)
    else:
        train, test = [(real, tr), (synth, all_s)], (real, te)
    X_parts, y_parts = [], []
    for pool, groups in train:
        idx = pool.rows(groups, originals_only=False)
        X_parts.append(pool.X[idx])
        y_parts.append(pool.labels[idx])
    pool, groups = test
    idx = pool.rows(groups, originals_only=True)
    return np.vstack(X_parts), np.concatenate(y_parts), pool.X[idx], pool.labels[idx]


def _run_condition(args):
    condition, real, synth, spec, classes = args
    X_tr, y_tr, X_te, y_te = _condition_sets(condition, real, synth, spec.split_seed)
    n = len(X_tr)
    k_max = min(max(spec.component_counts), n - 1, X_tr.shape[1])
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RankDeficientWarning)
        full = pca_fit(X_tr, k_max)
    rows = []
    index = {c: i for i, c in enumerate(classes)}
    for k in spec.component_counts:
        model = truncate(full, k)
        svm = svm_train(pca_project(model, X_tr), y_tr, spec.reg_weight, spec.epochs, classes=classes)
        pred = svm_predict(svm, pca_project(model, X_te))
        conf = np.zeros((len(classes), len(classes)), dtype=int)
        for t, p in zip(y_te, pred):
            conf[index[t], index[p]] += 1
        acc = float(np.trace(conf) / conf.sum()) if conf.sum() else 0.0
        rows.append(ExperimentRow(condition, k, model.k, n, len(y_te), acc, conf, list(classes)))
    return rows


def run_experiment(real, synth, spec, jobs=1):
    """Run every (condition, k) combination of ``spec``.

    ``real`` and ``synth`` are lists of :class:`~gaitsynth.features.FeatureVector`.
    PCA is fitted on each condition's training set only. Rows come back in
    canonical (condition, k) order regardless of ``jobs``.
    """
    R = _Pool(real, spec.kind)
    S = _Pool(synth, spec.kind)
    if len(R.group_labels) == 0 or len(S.group_labels) == 0:
        raise InsufficientSamples("both real and synthetic feature sets must be non-empty")
    if set(R.labels.tolist()) != set(S.labels.tolist()):
        raise LabelMismatch("real and synthetic sets cover different subjects")
    classes = sorted(set(R.labels.tolist()))
    if len(classes) < 2:
        raise SingleClass("experiments need at least two subjects")
    tasks = [(c, R, S, spec, classes) for c in spec.conditions]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            chunks = list(ex.map(_run_condition, tasks))
    else:
        chunks = [_run_condition(t) for t in tasks]
    return ExperimentResult([row for chunk in chunks for row in chunk])
