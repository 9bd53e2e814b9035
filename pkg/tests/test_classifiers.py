import numpy as np
import pytest
from sklearn.discriminant_analysis import QuadraticDiscriminantAnalysis
from sklearn.naive_bayes import GaussianNB
from sklearn.neighbors import KNeighborsClassifier
from sklearn.tree import DecisionTreeClassifier

from eegpipe.classifiers import KINDS, ClassifierSpec, Dataset, accuracy, fit, predict
from eegpipe.classifiers.bayes import qda_discriminants
from eegpipe.classifiers.mlp import init_params, loss_and_grads
from eegpipe.classifiers.svm import linear_kernel, rbf_kernel, smo_train
from eegpipe.classifiers.tree import grow_tree
from eegpipe.errors import (
    DimensionMismatch,
    InvalidHyperParam,
    LengthMismatch,
    SingularCovariance,
    UnsupportedHyperParam,
)

from conftest import blob_dataset

BLOB_SPECS = {
    "knn": ClassifierSpec.of("knn", n_neighbors=3),
    "gaussian_nb": ClassifierSpec.of("gaussian_nb"),
    "qda": ClassifierSpec.of("qda", reg_param=0.0),
    "decision_tree": ClassifierSpec.of("decision_tree", max_depth=3),
    "random_forest": ClassifierSpec.of("random_forest", n_estimators=20, max_features=1),
    "ada_boost": ClassifierSpec.of("ada_boost", n_estimators=20, learning_rate=1.0),
    "mlp": ClassifierSpec.of("mlp", solver="adam", learning_rate_init=0.01, activation="relu"),
    "svm_linear": ClassifierSpec.of("svm_linear", C=1.0),
    "svm_rbf": ClassifierSpec.of("svm_rbf", C=1.0, gamma=0.5),
}


def test_kinds():
    assert set(KINDS) == set(BLOB_SPECS)
    assert "gaussian_process" not in KINDS


@pytest.mark.parametrize("kind", sorted(BLOB_SPECS))
def test_blob_accuracy(kind, blobs):
    train, test = blobs
    m = fit(BLOB_SPECS[kind], train, seed=3)
    assert accuracy(test.y, predict(m, test.X)) >= 0.95


@pytest.mark.parametrize("kind", sorted(BLOB_SPECS))
def test_determinism(kind):
    train, test = blob_dataset(seed=4, sep=2.0)
    a = predict(fit(BLOB_SPECS[kind], train, seed=11), test.X)
    b = predict(fit(BLOB_SPECS[kind], train, seed=11), test.X)
    assert np.array_equal(a, b)


@pytest.mark.parametrize("kind", sorted(BLOB_SPECS))
def test_labels_preserved(kind):
    train, test = blob_dataset(seed=5)
    relabeled = Dataset(train.X, np.where(train.y == 0, 7, 3))
    pred = predict(fit(BLOB_SPECS[kind], relabeled, seed=0), test.X)
    assert set(np.unique(pred)) <= {3, 7}


@pytest.mark.parametrize("kind", sorted(BLOB_SPECS))
def test_dimension_check(kind, blobs):
    m = fit(BLOB_SPECS[kind], blobs[0])
    with pytest.raises(DimensionMismatch):
        predict(m, np.zeros((2, 3)))


def test_multiclass(blobs):
    train, test = blob_dataset(seed=6, n_classes=3, n_train=90, n_test=45)
    for kind, spec in BLOB_SPECS.items():
        acc = accuracy(test.y, predict(fit(spec, train, seed=1), test.X))
        assert acc >= 0.9, kind


# -- spec parsing -------------------------------------------------------------


def test_spec_text_round_trip():
    spec = ClassifierSpec.of("random_forest", n_estimators=50, criterion="entropy", max_depth=None)
    assert spec.text == "random_forest(max_depth=None,criterion=entropy,n_estimators=50)"
    assert ClassifierSpec.parse(spec.text) == spec
    assert ClassifierSpec.parse("svm_rbf(C=0.5,gamma=auto)") == ClassifierSpec.of("svm_rbf", C=0.5, gamma="auto")


@pytest.mark.parametrize(
    "kind, params",
    [
        ("knn", dict(n_neighbors=0)),
        ("knn", dict(leaf_size=3)),
        ("mlp", dict(solver="newton")),
        ("svm_rbf", dict(gamma=-1.0)),
        ("qda", dict(reg_param=1.5)),
        ("random_forest", dict(bootstrap="yes")),
    ],
)
def test_invalid_params(kind, params):
    with pytest.raises(InvalidHyperParam):
        ClassifierSpec.of(kind, **params)


def test_unknown_kind():
    with pytest.raises(InvalidHyperParam):
        ClassifierSpec.of("logistic")


def test_unsupported(blobs):
    with pytest.raises(UnsupportedHyperParam):
        fit(ClassifierSpec.of("gaussian_process", warm_start=True), blobs[0])
    with pytest.raises(UnsupportedHyperParam):
        fit(ClassifierSpec.of("mlp", solver="lbfgs"), blobs[0])


def test_single_class_rejected():
    with pytest.raises(InvalidHyperParam):
        fit(ClassifierSpec.of("knn"), Dataset(np.zeros((3, 2)), [1, 1, 1]))


def test_accuracy():
    assert accuracy([1, 2, 3], [1, 2, 3]) == 1.0
    assert accuracy([0, 0], [1, 1]) == 0.0
    assert accuracy([0, 1, 1, 0], [0, 1, 1, 1]) == 0.75
    with pytest.raises(LengthMismatch):
        accuracy([1, 2], [1])


# -- knn ------------------------------------------------------------------


def test_knn_training_accuracy(blobs):
    train = blobs[0]
    m = fit(ClassifierSpec.of("knn", n_neighbors=1), train)
    assert accuracy(train.y, predict(m, train.X)) == 1.0


def test_knn_algorithms_identical(blobs):
    train, test = blob_dataset(seed=7, sep=1.5)
    preds = [predict(fit(ClassifierSpec.of("knn", n_neighbors=5, algorithm=a), train), test.X)
             for a in ("ball_tree", "kd_tree", "brute")]
    assert np.array_equal(preds[0], preds[1]) and np.array_equal(preds[0], preds[2])


@pytest.mark.parametrize("k", [1, 3, 5])
def test_knn_matches_sklearn(k):
    train, test = blob_dataset(seed=8, sep=1.5)
    ours = predict(fit(ClassifierSpec.of("knn", n_neighbors=k), train), test.X)
    ref = KNeighborsClassifier(n_neighbors=k, algorithm="brute").fit(train.X, train.y).predict(test.X)
    assert np.array_equal(ours, ref)


def test_knn_tie_goes_to_lower_label():
    d = Dataset([[-1.0], [1.0]], [1, 0])
    assert predict(fit(ClassifierSpec.of("knn", n_neighbors=2), d), [[0.0]])[0] == 0


# -- Bayes / QDA ------------------------------------------------------------


def test_gnb_example():
    rng = np.random.default_rng(0)
    X = np.concatenate([rng.normal(0, 1, 50), rng.normal(10, 1, 50)])[:, None]
    d = Dataset(X, [0] * 50 + [1] * 50)
    assert predict(fit(ClassifierSpec.of("gaussian_nb"), d), [[1.0]])[0] == 0


def test_gnb_matches_sklearn():
    train, test = blob_dataset(seed=9, sep=1.0)
    ours = predict(fit(ClassifierSpec.of("gaussian_nb"), train), test.X)
    assert np.array_equal(ours, GaussianNB().fit(train.X, train.y).predict(test.X))


@pytest.mark.parametrize("reg", [0.0, 0.1, 0.9])
def test_qda_matches_sklearn(reg):
    train, test = blob_dataset(seed=10, sep=1.0)
    ours = predict(fit(ClassifierSpec.of("qda", reg_param=reg), train), test.X)
    # the reference shrinks differently for reg > 0, so compare only the unregularised case
    if reg == 0.0:
        ref = QuadraticDiscriminantAnalysis().fit(train.X, train.y).predict(test.X)
        assert np.array_equal(ours, ref)
    else:
        assert accuracy(test.y, ours) > 0.6


def test_qda_identity_covariance_matches_nearest_mean():
    train, test = blob_dataset(seed=11, sep=1.0)
    m = fit(ClassifierSpec.of("qda", reg_param=1.0), train)
    assert np.array_equal(m.state.covariances, np.broadcast_to(np.eye(2), (2, 2, 2)))
    # hand-built Gaussian with identity variance: prior plus squared distance
    means = np.array([train.X[train.y == k].mean(axis=0) for k in (0, 1)])
    log_prior = np.log(np.bincount(train.y) / train.y.size)
    score = log_prior - 0.5 * np.sum((test.X[:, None, :] - means[None]) ** 2, axis=2)
    assert np.array_equal(predict(m, test.X), np.argmax(score, axis=1))


def test_qda_tie_goes_to_lower_label():
    X = np.array([[-1.0, 0.0], [-1.0, 1.0], [-1.0, -1.0], [1.0, 0.0], [1.0, 1.0], [1.0, -1.0]])
    d = Dataset(X, [0, 0, 0, 1, 1, 1])
    m = fit(ClassifierSpec.of("qda", reg_param=0.5), d)
    disc = qda_discriminants(m.state, np.array([[0.0, 0.0]]))
    assert disc[0, 0] == disc[0, 1]
    assert predict(m, [[0.0, 0.0]])[0] == 0


def test_qda_singular():
    X = np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0], [5.0, 0.0], [6.0, 2.0], [7.0, 1.0]])
    with pytest.raises(SingularCovariance):
        fit(ClassifierSpec.of("qda", reg_param=0.0), Dataset(X, [0, 0, 0, 1, 1, 1]))


# -- trees ----------------------------------------------------------------


@pytest.mark.parametrize("criterion", ["gini", "entropy"])
@pytest.mark.parametrize("depth", [1, 2])
def test_shallow_tree_matches_sklearn(criterion, depth):
    rng = np.random.default_rng(12)
    X = rng.normal(size=(60, 3))
    y = (X[:, 0] + 0.5 * X[:, 1] > 0).astype(int)
    Xq = rng.normal(size=(50, 3))
    ours = predict(fit(ClassifierSpec.of("decision_tree", criterion=criterion, max_depth=depth), Dataset(X, y)), Xq)
    ref = DecisionTreeClassifier(criterion=criterion, max_depth=depth, random_state=0).fit(X, y)
    # near the root the best split is unique, so both implementations agree
    assert np.array_equal(ours, ref.predict(Xq))


def _impurity(y, criterion, K):
    p = np.bincount(y, minlength=K) / len(y)
    if criterion == "gini":
        return 1.0 - np.sum(p * p)
    p = p[p > 0]
    return -np.sum(p * np.log2(p))


def reference_tree(X, y, K, criterion, depth, max_depth, min_leaf):
    """Naive recursive CART: returns a predict function for one row."""
    majority = int(np.argmax(np.bincount(y, minlength=K)))
    if (max_depth is not None and depth >= max_depth) or len(y) < 2 or _impurity(y, criterion, K) <= 1e-12:
        return lambda x: majority
    best = None
    for f in range(X.shape[1]):
        values = np.unique(X[:, f])
        for a, b in zip(values[:-1], values[1:]):
            thr = 0.5 * (a + b)
            left = X[:, f] <= thr
            if left.sum() < min_leaf or (~left).sum() < min_leaf:
                continue
            score = (left.sum() * _impurity(y[left], criterion, K)
                     + (~left).sum() * _impurity(y[~left], criterion, K)) / len(y)
            if best is None or score < best[0]:
                best = (score, f, thr)
    if best is None:
        return lambda x: majority
    _, f, thr = best
    left = X[:, f] <= thr
    lt = reference_tree(X[left], y[left], K, criterion, depth + 1, max_depth, min_leaf)
    rt = reference_tree(X[~left], y[~left], K, criterion, depth + 1, max_depth, min_leaf)
    return lambda x: lt(x) if x[f] <= thr else rt(x)


@pytest.mark.parametrize("criterion", ["gini", "entropy"])
@pytest.mark.parametrize("depth, min_leaf", [(3, 1), (5, 2), (None, 1), (None, 4)])
def test_tree_matches_reference(criterion, depth, min_leaf):
    rng = np.random.default_rng(19)
    X = np.round(rng.normal(size=(70, 3)), 1)
    y = rng.integers(0, 3, 70)
    Xq = np.round(rng.normal(size=(60, 3)), 2)
    spec = ClassifierSpec.of("decision_tree", criterion=criterion, max_depth=depth, min_samples_leaf=min_leaf)
    ours = predict(fit(spec, Dataset(X, y)), Xq)
    ref = reference_tree(X, y, 3, criterion, 0, depth, min_leaf)
    assert ours.tolist() == [ref(x) for x in Xq]


def test_tree_min_samples_leaf():
    rng = np.random.default_rng(13)
    X = rng.normal(size=(40, 2))
    y = rng.integers(0, 2, 40)
    t = grow_tree(X, y, 2, min_samples_leaf=10)
    leaves = t.feature < 0
    counts = np.bincount(np.searchsorted(np.flatnonzero(leaves), _leaf_ids(t, X)), minlength=leaves.sum())
    assert counts.min() >= 10


def _leaf_ids(t, X):
    out = []
    for x in X:
        node = 0
        while t.feature[node] >= 0:
            node = t.left[node] if x[t.feature[node]] <= t.threshold[node] else t.right[node]
        out.append(node)
    return np.array(out)


def test_tree_depth_limit():
    rng = np.random.default_rng(14)
    X = rng.normal(size=(80, 2))
    y = rng.integers(0, 3, 80)
    assert grow_tree(X, y, 3, max_depth=3).depth <= 3
    assert grow_tree(X, y, 3).depth > 3


def test_leaf_tie_goes_to_lower_label():
    d = Dataset([[0.0], [0.0]], [1, 0])
    assert predict(fit(ClassifierSpec.of("decision_tree"), d), [[0.0]])[0] == 0


def test_forest_single_tree_equals_tree():
    train, test = blob_dataset(seed=15, sep=1.0)
    params = dict(max_depth=5, min_samples_split=3, min_samples_leaf=2, criterion="entropy")
    rf = ClassifierSpec.of("random_forest", n_estimators=1, bootstrap=False, max_features=2, **params)
    dt = ClassifierSpec.of("decision_tree", **params)
    assert np.array_equal(predict(fit(rf, train, 4), test.X), predict(fit(dt, train, 4), test.X))


def test_ada_boost_separable():
    rng = np.random.default_rng(16)
    X = rng.uniform(-1, 1, size=(40, 2))
    y = (X[:, 1] > 0.1).astype(int)
    m = fit(ClassifierSpec.of("ada_boost", n_estimators=10), Dataset(X, y))
    assert accuracy(y, predict(m, X)) == 1.0


def test_ada_boost_xor_needs_several_stumps():
    X = np.array([[0, 0], [0, 1], [1, 0], [1, 1]] * 5, dtype=float) + np.random.default_rng(0).normal(0, 0.05, (20, 2))
    y = np.array([0, 1, 1, 0] * 5)
    m = fit(ClassifierSpec.of("ada_boost", n_estimators=50, learning_rate=1.0), Dataset(X, y))
    assert m.state.alphas.shape[0] >= 1
    assert np.all(np.isfinite(m.state.alphas))


# -- MLP ------------------------------------------------------------------


@pytest.mark.parametrize("activation", ["logistic", "tanh", "relu"])
def test_mlp_gradient_finite_differences(activation):
    rng = np.random.default_rng(17)
    X = rng.normal(size=(7, 3))
    Y = np.eye(3)[rng.integers(0, 3, 7)]
    params = init_params(3, 4, 3, rng)
    params = [p + rng.normal(0, 0.1, p.shape) for p in params]
    _, grads = loss_and_grads(params, X, Y, 0.01, activation)
    h = 1e-6
    worst = 0.0
    for p, g in zip(params, grads):
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + h
            up, _ = loss_and_grads(params, X, Y, 0.01, activation)
            p[idx] = old - h
            dn, _ = loss_and_grads(params, X, Y, 0.01, activation)
            p[idx] = old
            fd = (up - dn) / (2 * h)
            worst = max(worst, abs(fd - g[idx]) / max(abs(fd), abs(g[idx]), 1e-6))
    assert worst < 1e-4


def test_mlp_stops_early(blobs):
    m = fit(ClassifierSpec.of("mlp", solver="adam", learning_rate_init=0.1), blobs[0])
    assert m.state.n_epochs < 200


@pytest.mark.parametrize("solver", ["sgd", "adam"])
def test_mlp_divergent_settings_do_not_raise(solver, blobs):
    spec = ClassifierSpec.of("mlp", solver=solver, learning_rate_init=0.5, momentum=0.999, activation="relu")
    pred = predict(fit(spec, blobs[0]), blobs[1].X)
    assert set(np.unique(pred)) <= {0, 1}


# -- SVM ------------------------------------------------------------------


def test_svm_symmetric_boundary():
    d = Dataset([[-2.0], [-1.0], [1.0], [2.0]], [0, 0, 1, 1])
    m = fit(ClassifierSpec.of("svm_linear", C=1.0), d)
    assert predict(m, [[0.1]])[0] == 1
    assert predict(m, [[-0.1]])[0] == 0


@pytest.mark.parametrize("kernel, gamma", [(linear_kernel, None), (rbf_kernel, 0.5)])
@pytest.mark.parametrize("C", [0.1, 1.0])
def test_smo_kkt(kernel, gamma, C):
    train, _ = blob_dataset(seed=18, sep=1.5)
    y_pm = np.where(train.y == 1, 1.0, -1.0)
    svm = smo_train(train.X, y_pm, C, kernel, gamma, 1e-3, 100, np.random.default_rng(0))
    a = svm.alpha
    assert np.all(a >= 0) and np.all(a <= C + 1e-12)
    assert abs(np.sum(a * y_pm)) < 1e-6
    # margin conditions within the SMO tolerance, up to the step size floor
    f = kernel(train.X, train.X, gamma) @ (a * y_pm) + svm.intercept
    margin = y_pm * f
    assert np.all(margin[a < 1e-8] >= 1 - 0.05)
    assert np.all(margin[a > C - 1e-8] <= 1 + 0.05)


def test_svm_auto_gamma(blobs):
    m = fit(ClassifierSpec.of("svm_rbf", gamma="auto"), blobs[0])
    assert m.state.gamma == 0.5
