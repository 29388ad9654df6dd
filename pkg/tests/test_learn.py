import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from sklearn.svm import SVC

from pfkernel.learn import (IndefiniteKernelError, KfdrConfig, check_psd, kfdr_argmax, kfdr_scan, kfdr_score,
                            smo_solve, svm_predict, svm_train)


def rbf(X, Y, gamma=1.0):
    return np.exp(-gamma * ((X[:, None, :] - Y[None, :, :]) ** 2).sum(axis=2))


def blobs(rng, n_per, k, spread=0.6):
    centers = rng.normal(size=(k, 2)) * 2
    X = np.concatenate([centers[c] + spread * rng.normal(size=(n_per, 2)) for c in range(k)])
    return X, np.repeat(np.arange(k), n_per)


def block_gram(sizes, within=1.0, across=0.1):
    labels = np.repeat(np.arange(len(sizes)), sizes)
    return np.where(labels[:, None] == labels[None, :], within, across), labels


# -- SVM ----------------------------------------------------------------------------

@pytest.mark.parametrize("seed, C", [(0, 0.1), (1, 1.0), (2, 10.0), (3, 100.0)])
def test_matches_libsvm(seed, C):
    rng = np.random.default_rng(seed)
    X, y = blobs(rng, 20, 3)
    Xt = rng.normal(size=(30, 2)) * 2
    K, Kt = rbf(X, X), rbf(Xt, X)
    ours = svm_predict(svm_train(K, y, C), Kt)
    ref = SVC(kernel="precomputed", C=C, tol=1e-3).fit(K, y).predict(Kt)
    assert (ours == ref).mean() >= 0.95


def test_binary_decision_values_match_libsvm():
    rng = np.random.default_rng(11)
    X, y = blobs(rng, 25, 2, spread=1.5)
    K = rbf(X, X, 0.5)
    model = svm_train(K, y, 1.0)
    ref = SVC(kernel="precomputed", C=1.0, tol=1e-6).fit(K, y)
    # sklearn's decision function is positive for the second class
    ours = model.decision_values(K)[(0, 1)]
    np.testing.assert_allclose(ours, -ref.decision_function(K), atol=5e-3)


def test_objective_monotone_and_kkt():
    rng = np.random.default_rng(4)
    X, y = blobs(rng, 30, 2, spread=1.5)
    yy = np.where(y == 0, 1.0, -1.0)
    m = smo_solve(rbf(X, X), yy, C=1.0, track_objective=True)
    obj = np.array(m.objective)
    assert len(obj) > 5
    assert np.all(np.diff(obj) >= -1e-12)
    assert m.kkt_gap < 1e-3


def test_separable_training_accuracy():
    X = np.array([[0, 0], [0, 0.2], [3, 3], [3, 3.2]], dtype=float)
    y = np.array([0, 0, 1, 1])
    K = X @ X.T + 1.0
    assert np.array_equal(svm_predict(svm_train(K, y, 10.0), K), y)


def test_block_toy_votes():
    K, labels = block_gram([2, 2, 2])
    model = svm_train(K, labels, 1.0)
    assert np.array_equal(svm_predict(model, K), labels)
    # held-out points that look like each block
    held = np.array([[1, 1, 0.1, 0.1, 0.1, 0.1], [0.1, 0.1, 1, 1, 0.1, 0.1], [0.1, 0.1, 0.1, 0.1, 1, 1]])
    assert svm_predict(model, held).tolist() == [0, 1, 2]
    # zero kernel rows give zero decision values, which vote for the lower class
    assert svm_predict(model, np.zeros((3, 6))).tolist() == [0, 0, 0]


def test_prediction_invariant_to_training_order():
    rng = np.random.default_rng(9)
    X, y = blobs(rng, 15, 3)
    Xt = rng.normal(size=(20, 2)) * 2
    perm = rng.permutation(len(y))
    a = svm_predict(svm_train(rbf(X, X), y, 1.0), rbf(Xt, X))
    b = svm_predict(svm_train(rbf(X[perm], X[perm]), y[perm], 1.0), rbf(Xt, X[perm]))
    assert np.array_equal(a, b)


def test_svm_errors():
    K, labels = block_gram([2, 2])
    with pytest.raises(ValueError):
        svm_train(K, np.zeros(4), 1.0)
    bad = K.copy()
    bad[0, 1] = np.nan
    with pytest.raises(ValueError):
        svm_train(bad, labels)
    with pytest.raises(IndefiniteKernelError):
        svm_train(np.array([[0, 1, 0, 0], [1, 0, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1.0]]), labels)
    model = svm_train(K, labels)
    with pytest.raises(ValueError):
        svm_predict(model, np.zeros((2, 3)))


def test_check_psd_tolerates_rounding():
    K = np.eye(3)
    K[0, 0] = -1e-9
    with pytest.warns(RuntimeWarning):
        check_psd(K)


# -- KFDR ---------------------------------------------------------------------------

def kfdr_feature_oracle(K, tau, gamma):
    """Fisher ratio with explicit features from an eigendecomposition of K."""
    ev, V = np.linalg.eigh(K)
    Phi = V * np.sqrt(np.clip(ev, 0, None))
    n = len(K)
    a, b = Phi[:tau], Phi[tau:]
    d = b.mean(axis=0) - a.mean(axis=0)
    Sa = np.cov(a.T, bias=True)
    Sb = np.cov(b.T, bias=True)
    Sw = (len(a) * Sa + len(b) * Sb) / n
    return len(a) * len(b) / n * d @ np.linalg.solve(Sw + gamma * np.eye(n), d)


@settings(max_examples=20)
@given(st.integers(0, 2 ** 31), st.integers(6, 20), st.sampled_from([1e-3, 1e-1, 1.0]))
def test_kfdr_matches_feature_space(seed, n, gamma):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, 3))
    K = rbf(X, X, 0.3)
    for tau in range(2, n - 1):
        assert kfdr_score(K, tau, gamma) == pytest.approx(kfdr_feature_oracle(K, tau, gamma), rel=1e-6, abs=1e-8)


def test_kfdr_identical_samples_flat():
    scores = kfdr_scan(np.ones((12, 12)))
    assert max(abs(s) for _, s in scores) < 1e-9


def test_kfdr_two_blocks():
    K, _ = block_gram([7, 5], across=0.3)
    assert kfdr_argmax(kfdr_scan(K)) == 7


def test_kfdr_constant_shift_invariance():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(15, 2))
    K = rbf(X, X)
    a = [s for _, s in kfdr_scan(K)]
    b = [s for _, s in kfdr_scan(K + 2.5)]
    np.testing.assert_allclose(a, b, rtol=1e-8)


def test_kfdr_ranges_and_ties():
    K = np.eye(10)
    assert [t for t, _ in kfdr_scan(K)] == list(range(2, 9))
    assert [t for t, _ in kfdr_scan(K, KfdrConfig(candidate_range=(4, 5)))] == [4, 5]
    assert kfdr_argmax([(3, 1.0), (4, 2.0), (5, 2.0)]) == 4
    with pytest.raises(ValueError):
        kfdr_argmax([])
    with pytest.raises(ValueError):
        KfdrConfig(gamma=0)
