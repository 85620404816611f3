import dataclasses

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.optimize import linprog

from gaitsynth.errors import (ConfigError, EmptyClass, InsufficientComponents, InsufficientSamples,
                              LabelMismatch, RankDeficientWarning, SingleClass)
from gaitsynth.features import HEIGHT, SIZE, WIDTH, FeatureVector
from gaitsynth.pipeline import proxy_feature_sets
from gaitsynth.recognition import (CONDITIONS, ExperimentSpec, PcaModel, _condition_sets, _Pool,
                                   eigen_images, image_grid, pca_fit, pca_project, pca_reconstruct,
                                   pca_spectrum, run_experiment, stratified_split, svm_predict,
                                   svm_train, truncate)
from gaitsynth.walker import default_identity


def low_rank_data(rng, n=30, d=SIZE, rank=8):
    return rng.normal(size=(n, rank)) * np.arange(rank, 0, -1) @ rng.normal(size=(rank, d)) + 3.0


def sign_rule(components):
    idx = np.argmax(np.abs(components), axis=1)
    return components * np.sign(components[np.arange(len(components)), idx])[:, None]


def vectors(rng, labels_per_group, provenance="synthetic", n_aug=1, spread=0.05, centres=None):
    """Clustered fake feature vectors; groups of ``n_aug`` share a source."""
    centres = centres or {}
    out = []
    for g, label in enumerate(labels_per_group):
        c = centres.setdefault(label, rng.random(SIZE))
        base = c + spread * rng.normal(size=SIZE)
        for a in range(n_aug):
            v = base + 0.01 * a
            v[0] = g                     # source-group tag
            out.append(FeatureVector(v, label, provenance, "GEI", a))
    return out


# -- PCA -------------------------------------------------------------------------

def test_identical_vectors_are_rank_deficient():
    X = np.tile(np.arange(SIZE, dtype=float), (5, 1))
    with pytest.warns(RankDeficientWarning):
        m = pca_fit(X, 2)
    assert m.rank_deficient and m.k == 0
    assert np.array_equal(m.mean, X[0])


def test_axis_aligned_toy_covariance():
    s, t = np.sqrt(6.0), np.sqrt(1.5)    # sample covariance diag(4, 1)
    X = np.zeros((4, SIZE))
    X[:, 0] = [s, -s, 0, 0]
    X[:, 1] = [0, 0, t, -t]
    m = pca_fit(X, 2)
    e0 = np.zeros(SIZE)
    e0[0] = 1.0
    assert m.eigenvalues == pytest.approx([4.0, 1.0])
    assert np.abs(m.components[0] - e0).max() < 1e-12
    assert abs(m.components[1, 1]) == pytest.approx(1.0) and m.components[1, 1] > 0


def test_full_rank_reconstruction(rng):
    X = low_rank_data(rng)
    m = pca_fit(X, 8)
    assert not m.rank_deficient
    back = pca_reconstruct(m, pca_project(m, X))
    assert np.linalg.norm(back - X) <= 1e-6 * np.linalg.norm(X - X.mean(axis=0))


def test_components_orthonormal_and_ordered(rng):
    X = rng.normal(size=(40, SIZE))
    m = pca_fit(X, 39)
    assert np.abs(m.components @ m.components.T - np.eye(39)).max() < 1e-8
    assert np.all(np.diff(m.eigenvalues) <= 0)


@pytest.mark.parametrize("n,d", [(12, 40), (60, 15)])
def test_matches_svd_oracle(rng, n, d):
    X = rng.normal(size=(n, d)) @ np.diag(np.linspace(3, 1, d))
    k = min(n - 1, d)
    m = pca_fit(X, k)
    U, sv, Vt = np.linalg.svd(X - X.mean(axis=0), full_matrices=False)
    assert m.eigenvalues == pytest.approx(sv[:k] ** 2 / (n - 1), rel=1e-9)
    assert np.abs(m.components - sign_rule(Vt[:k])).max() < 1e-8


def test_largest_entry_is_positive(rng):
    m = pca_fit(rng.normal(size=(20, SIZE)), 10)
    top = m.components[np.arange(10), np.argmax(np.abs(m.components), axis=1)]
    assert np.all(top > 0)


def test_projection_examples(rng):
    X = low_rank_data(rng)
    m = pca_fit(X, 5)
    assert np.abs(pca_project(m, m.mean)).max() < 1e-9
    e = pca_project(m, m.mean + m.components[0])
    assert e == pytest.approx([1, 0, 0, 0, 0], abs=1e-9)
    for v in X[:5] + rng.normal(size=(5, SIZE)):
        assert np.linalg.norm(pca_project(m, v)) <= np.linalg.norm(v - m.mean) + 1e-9


def test_reconstruction_error_falls_with_k(rng):
    X = low_rank_data(rng)
    full = pca_fit(X, 8)
    errs = [np.linalg.norm(pca_reconstruct(truncate(full, k), pca_project(truncate(full, k), X)) - X)
            for k in range(9)]
    assert all(a >= b - 1e-9 for a, b in zip(errs, errs[1:]))


def test_truncation_equals_direct_fit(rng):
    X = rng.normal(size=(25, 60))
    direct = pca_fit(X, 4)
    cut = truncate(pca_fit(X, 20), 4)
    assert np.array_equal(direct.components, cut.components)


def test_pca_argument_checks(rng):
    with pytest.raises(InsufficientSamples):
        pca_fit(rng.normal(size=(1, 10)), 1)
    with pytest.raises(InsufficientSamples):
        pca_fit(rng.normal(size=(5, 10)), 5)
    with pytest.raises(InsufficientSamples):
        pca_spectrum(np.zeros(10))


def test_eigen_images(rng):
    sil = np.zeros((HEIGHT, WIDTH))
    sil[10:40, 8:22] = 1.0
    comps = np.vstack([sil.ravel() / np.linalg.norm(sil), np.full(SIZE, SIZE ** -0.5),
                       rng.normal(size=(7, SIZE))])
    model = PcaModel(np.zeros(SIZE), comps, np.linspace(9, 1, 9))
    imgs = eigen_images(model)
    assert np.abs(imgs[0] - sil).max() < 1e-12
    assert np.array_equal(imgs[1], np.full((HEIGHT, WIDTH), 0.5))
    assert all(i.min() >= 0 and i.max() <= 1 for i in imgs)
    assert image_grid(imgs).shape == (3 * HEIGHT, 3 * WIDTH)
    with pytest.raises(InsufficientComponents):
        eigen_images(truncate(model, 8))


def test_refit_gives_identical_grid(rng):
    X = rng.random((15, SIZE))
    a = image_grid(eigen_images(pca_fit(X, 10)))
    b = image_grid(eigen_images(pca_fit(X.copy(), 10)))
    assert np.array_equal(a, b)


# -- SVM -------------------------------------------------------------------------

def test_separable_clusters(rng):
    X = np.vstack([rng.normal(-3, 1, (20, 4)), rng.normal(3, 1, (20, 4))])
    y = ["a"] * 20 + ["b"] * 20
    m = svm_train(X, y)
    assert svm_predict(m, X) == y
    assert svm_predict(m, np.full(4, -6.0)) == "a"


def test_xor_is_not_linearly_separable():
    X = np.array([[0, 0], [1, 1], [0, 1], [1, 0]], dtype=float)
    y = np.array([1, 1, -1, -1])
    # oracle: no (w, b) with y (w.x + b) >= 1 for all four points
    res = linprog(np.zeros(3), A_ub=-y[:, None] * np.hstack([X, np.ones((4, 1))]), b_ub=-np.ones(4),
                  bounds=[(None, None)] * 3)
    assert res.status == 2
    labels = ["p" if v > 0 else "n" for v in y]
    for reg, epochs in ((1e-2, 200), (1e-1, 50), (1.0, 500)):
        acc = np.mean(np.array(svm_predict(svm_train(X, labels, reg, epochs), X)) == labels)
        assert acc <= 0.75


def test_class_errors(rng):
    X = rng.normal(size=(6, 3))
    with pytest.raises(SingleClass):
        svm_train(X, ["a"] * 6)
    with pytest.raises(EmptyClass):
        svm_train(X, ["a", "b"] * 3, classes=["a", "b", "c"])
    with pytest.raises(ConfigError):
        svm_train(X, ["a"] * 5)
    with pytest.raises(ConfigError):
        svm_train(X, ["a", "b"] * 3, reg_weight=0)


def test_ties_go_to_smallest_label():
    m = svm_train(np.array([[0.0], [1.0]]), ["b", "a"], epochs=1)
    tie = dataclasses.replace(m, weights=np.zeros_like(m.weights), biases=np.zeros(2))
    assert svm_predict(tie, np.array([0.3])) == "a"
    tie = dataclasses.replace(tie, classes=["x", "y"], biases=np.array([0.5, 0.5]))
    assert svm_predict(tie, np.array([0.3])) == "x"


@given(st.floats(0.01, 100))
def test_argmax_invariant_to_score_scaling(c):
    rng = np.random.default_rng(1)
    X = rng.normal(size=(30, 5))
    y = [str(i % 3) for i in range(30)]
    m = svm_train(X, y, epochs=50)
    scaled = dataclasses.replace(m, weights=c * m.weights, biases=c * m.biases)
    assert svm_predict(scaled, X) == svm_predict(m, X)


@pytest.mark.parametrize("c", [0.25, 4.0, 1024.0])
def test_feature_scaling_absorbed_by_standardizer(rng, c):
    X = rng.normal(size=(40, 6))
    y = [str(i % 4) for i in range(40)]
    a = svm_train(X, y, epochs=80)
    b = svm_train(c * X, y, epochs=80)
    Q = rng.normal(size=(10, 6))
    assert svm_predict(a, Q) == svm_predict(b, c * Q)
    assert np.array_equal(a.weights, b.weights)


# -- splits and experiments -----------------------------------------------------------

def test_stratified_split():
    labels = np.array(["a"] * 10 + ["b"] * 5 + ["c"] * 2)
    tr, te = stratified_split(labels, 0.7, seed=3)
    assert set(tr).isdisjoint(te) and len(tr) + len(te) == 17
    counts = {c: int(np.sum(labels[tr] == c)) for c in "abc"}
    assert counts == {"a": 7, "b": 4, "c": 1}      # round half-up, 3.5 -> 4; at least one test item
    tr2, te2 = stratified_split(labels, 0.7, seed=3)
    assert np.array_equal(tr, tr2) and np.array_equal(te, te2)
    assert not np.array_equal(tr, stratified_split(labels, 0.7, seed=4)[0])
    with pytest.raises(InsufficientSamples):
        stratified_split(np.array(["a", "a", "b"]), 0.7, 0)


def test_spec_validation():
    with pytest.raises(ConfigError):
        ExperimentSpec(conditions=("R-R", "X-Y"))
    with pytest.raises(ConfigError):
        ExperimentSpec(component_counts=(10, 5))
    with pytest.raises(ConfigError):
        ExperimentSpec(component_counts=(0, 5))


@pytest.fixture(scope="module")
def clustered():
    rng = np.random.default_rng(7)
    labels = [f"s{i}" for i in range(4) for _ in range(6)]
    centres = {}
    real = vectors(rng, labels, "real-proxy", n_aug=3, centres=centres)
    synth = vectors(rng, labels, "synthetic", n_aug=3, spread=0.05, centres=centres)
    return real, synth


def test_augmented_copies_never_straddle_splits(clustered):
    real, synth = clustered
    R, S = _Pool(real, "GEI"), _Pool(synth, "GEI")
    for cond in CONDITIONS:
        X_tr, y_tr, X_te, y_te = _condition_sets(cond, R, S, 0)
        if cond in ("R-R", "S-S"):
            assert set(X_tr[:, 0]).isdisjoint(X_te[:, 0])
        assert len(X_te) == len(y_te)


def test_test_rows_do_not_reach_training(clustered):
    real, synth = clustered
    R = _Pool(real, "GEI")
    S = _Pool(synth, "GEI")
    a = _condition_sets("70%R+S-30%R", R, S, 0)
    _, te = stratified_split(R.group_labels, 0.7, 0)
    R.X[R.rows(te, False)] += 100.0        # mutate held-out real vectors only
    b = _condition_sets("70%R+S-30%R", R, S, 0)
    assert np.array_equal(a[0], b[0])
    assert not np.array_equal(a[2], b[2])


def test_experiment_rows_and_bookkeeping(clustered):
    real, synth = clustered
    spec = ExperimentSpec(CONDITIONS, (2, 5, 10), split_seed=1)
    res = run_experiment(real, synth, spec)
    assert len(res.rows) == 6 * 3
    assert [(r.condition, r.k) for r in res.rows] == [(c, k) for c in CONDITIONS for k in (2, 5, 10)]
    for r in res.rows:
        assert r.confusion.sum() == r.test_n
        assert r.accuracy == pytest.approx(np.trace(r.confusion) / r.test_n)
        assert r.k_used <= r.k
    rr = res.rows[0]
    # test rows are un-augmented source cycles: 6 per subject, 30 % held out -> 2 each
    assert rr.test_n == 8 and rr.train_n == 4 * 4 * 3
    assert rr.confusion.sum(axis=1).tolist() == [2, 2, 2, 2]
    assert res.accuracy("S-S", 10) == 1.0


def test_experiment_is_deterministic_across_jobs(clustered):
    real, synth = clustered
    spec = ExperimentSpec(CONDITIONS, (3, 6))
    a = run_experiment(real, synth, spec)
    b = run_experiment(real, synth, spec, jobs=2)
    for x, y in zip(a.rows, b.rows):
        assert (x.condition, x.k, x.accuracy, x.train_n) == (y.condition, y.k, y.accuracy, y.train_n)
        assert np.array_equal(x.confusion, y.confusion)


def test_experiment_errors(clustered):
    real, synth = clustered
    spec = ExperimentSpec(("R-S",), (2,))
    with pytest.raises(LabelMismatch):
        run_experiment(real, [v for v in synth if v.label != "s0"], spec)
    with pytest.raises(InsufficientSamples):
        run_experiment(real, [], spec)
    one = [v for v in real if v.label == "s1"]
    with pytest.raises(SingleClass):
        run_experiment(one, [dataclasses.replace(v, provenance="synthetic") for v in one], spec)


@pytest.mark.slow
def test_two_distinct_walkers_are_separable():
    tall = default_identity("tall")
    short = dataclasses.replace(
        default_identity("short"),
        segment_lengths={k: 0.75 * v for k, v in tall.segment_lengths.items()},
        segment_radii={k: 1.3 * v for k, v in tall.segment_radii.items()})
    sets = proxy_feature_sets([tall, short], n_cycles=5, seed=2)
    res = run_experiment(sets["real-proxy"], sets["synthetic"], ExperimentSpec(("S-S",), (2, 3)))
    assert all(r.accuracy == 1.0 for r in res.rows)
