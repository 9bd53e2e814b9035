"""CART decision trees, random forests and SAMME AdaBoost on stumps.

Trees are grown depth-first by a numba kernel. Split candidates are the
midpoints between consecutive distinct sorted values of a feature; the best
split minimises the weighted child impurity, ties resolved toward the lower
feature index and then the lower threshold. Leaves predict the weighted
majority class, ties toward the lower class index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numba
import numpy as np

from .base import vote

GINI, ENTROPY = 0, 1
_CRITERIA = {"gini": GINI, "entropy": ENTROPY}


@numba.njit(cache=True)
def _impurity(counts, total, criterion):
    if total <= 0.0:
        return 0.0
    acc = 0.0
    if criterion == GINI:
        for k in range(counts.shape[0]):
            p = counts[k] / total
            acc += p * p
        return 1.0 - acc
    for k in range(counts.shape[0]):
        if counts[k] > 0.0:
            p = counts[k] / total
            acc -= p * math.log2(p)
    return acc


@numba.njit(cache=True)
def _grow(X, y, w, n_classes, criterion, max_depth, min_split, min_leaf, max_features, keys):
    n, F = X.shape
    cap = 2 * n + 1
    feature = np.full(cap, -1, np.int64)
    threshold = np.zeros(cap)
    left = np.full(cap, -1, np.int64)
    right = np.full(cap, -1, np.int64)
    label = np.zeros(cap, np.int64)

    idx = np.arange(n)
    buf = np.empty(n, np.int64)
    st_start = np.empty(cap, np.int64)
    st_end = np.empty(cap, np.int64)
    st_depth = np.empty(cap, np.int64)
    st_node = np.empty(cap, np.int64)
    st_start[0] = 0
    st_end[0] = n
    st_depth[0] = 0
    st_node[0] = 0
    top = 1
    n_nodes = 1

    counts = np.zeros(n_classes)
    lcounts = np.zeros(n_classes)
    rcounts = np.zeros(n_classes)
    vals = np.empty(n)
    subset = max_features < F

    while top > 0:
        top -= 1
        start = st_start[top]
        end = st_end[top]
        depth = st_depth[top]
        node = st_node[top]
        m = end - start

        counts[:] = 0.0
        for t in range(start, end):
            counts[y[idx[t]]] += w[idx[t]]
        total = counts.sum()
        best_k = 0
        for k in range(1, n_classes):
            if counts[k] > counts[best_k]:
                best_k = k
        label[node] = best_k

        parent_imp = _impurity(counts, total, criterion)
        if (max_depth >= 0 and depth >= max_depth) or m < min_split or m < 2 * min_leaf or parent_imp <= 1e-12:
            continue

        if subset:
            order = np.argsort(keys[node])
        else:
            order = np.arange(F)

        best_score = np.inf
        best_f = -1
        best_thr = 0.0
        used = 0
        for t in range(F):
            if subset and used >= max_features:
                break
            f = order[t]
            for s in range(m):
                vals[s] = X[idx[start + s], f]
            srt = np.argsort(vals[:m], kind="mergesort")
            if vals[srt[0]] == vals[srt[m - 1]]:
                continue
            used += 1
            lcounts[:] = 0.0
            wl = 0.0
            for p in range(m - 1):
                i = idx[start + srt[p]]
                lcounts[y[i]] += w[i]
                wl += w[i]
                a = vals[srt[p]]
                b = vals[srt[p + 1]]
                if a == b:
                    continue
                nl = p + 1
                if nl < min_leaf or m - nl < min_leaf:
                    continue
                for k in range(n_classes):
                    rcounts[k] = counts[k] - lcounts[k]
                wr = total - wl
                score = (wl * _impurity(lcounts, wl, criterion) + wr * _impurity(rcounts, wr, criterion)) / total
                if score < best_score or (score == best_score and f < best_f):
                    best_score = score
                    best_f = f
                    thr = 0.5 * (a + b)
                    if thr >= b:
                        thr = a
                    best_thr = thr
        if best_f < 0:
            continue

        # stable partition of idx[start:end] around the threshold
        nl = 0
        for t in range(start, end):
            if X[idx[t], best_f] <= best_thr:
                buf[nl] = idx[t]
                nl += 1
        nr = nl
        for t in range(start, end):
            if X[idx[t], best_f] > best_thr:
                buf[nr] = idx[t]
                nr += 1
        for t in range(m):
            idx[start + t] = buf[t]

        feature[node] = best_f
        threshold[node] = best_thr
        left[node] = n_nodes
        right[node] = n_nodes + 1
        # push right first so the left subtree is grown first
        st_start[top] = start + nl
        st_end[top] = end
        st_depth[top] = depth + 1
        st_node[top] = n_nodes + 1
        top += 1
        st_start[top] = start
        st_end[top] = start + nl
        st_depth[top] = depth + 1
        st_node[top] = n_nodes
        top += 1
        n_nodes += 2

    return feature[:n_nodes], threshold[:n_nodes], left[:n_nodes], right[:n_nodes], label[:n_nodes]


@numba.njit(cache=True)
def _apply(feature, threshold, left, right, label, X):
    out = np.empty(X.shape[0], np.int64)
    for i in range(X.shape[0]):
        node = 0
        while feature[node] >= 0:
            if X[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = label[node]
    return out


@dataclass(frozen=True, eq=False)
class Tree:
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray

    @property
    def node_count(self) -> int:
        return self.feature.shape[0]

    @property
    def depth(self) -> int:
        def walk(node):
            if self.feature[node] < 0:
                return 0
            return 1 + max(walk(self.left[node]), walk(self.right[node]))

        return walk(0)

    def predict(self, X) -> np.ndarray:
        return _apply(self.feature, self.threshold, self.left, self.right, self.label, np.ascontiguousarray(X))


def grow_tree(
    X,
    y,
    n_classes,
    *,
    sample_weight=None,
    criterion="gini",
    max_depth=None,
    min_samples_split=2,
    min_samples_leaf=1,
    max_features=None,
    rng=None,
) -> Tree:
    """Grow one CART tree on class indices ``y`` in ``range(n_classes)``.

    With ``max_features`` below the feature count, each split draws a random
    feature order from ``rng`` and scans it until that many non-constant
    features have been evaluated.
    """
    X = np.ascontiguousarray(X, dtype=np.float64)
    y = np.ascontiguousarray(y, dtype=np.int64)
    n, F = X.shape
    w = np.ones(n) if sample_weight is None else np.ascontiguousarray(sample_weight, dtype=np.float64)
    mf = F if max_features is None else min(int(max_features), F)
    if mf < F:
        if rng is None:
            raise ValueError("a random generator is required when max_features < n_features")
        keys = rng.random((2 * n + 1, F))
    else:
        keys = np.zeros((1, 1))
    arrays = _grow(
        X,
        y,
        w,
        int(n_classes),
        _CRITERIA[criterion],
        -1 if max_depth is None else int(max_depth),
        int(min_samples_split),
        int(min_samples_leaf),
        mf,
        keys,
    )
    return Tree(*arrays)


# --------------------------------------------------------------------------
# Kind-level fit/predict
# --------------------------------------------------------------------------


def _tree_kwargs(params):
    return {
        "criterion": params["criterion"],
        "max_depth": params["max_depth"],
        "min_samples_split": params["min_samples_split"],
        "min_samples_leaf": params["min_samples_leaf"],
        "max_features": params["max_features"],
    }


def fit_decision_tree(X, y, n_classes, params, rng):
    return grow_tree(X, y, n_classes, rng=rng, **_tree_kwargs(params))


def predict_decision_tree(state: Tree, X, n_classes):
    return state.predict(X)


def fit_random_forest(X, y, n_classes, params, rng):
    n = X.shape[0]
    kwargs = _tree_kwargs(params)
    trees = []
    for _ in range(params["n_estimators"]):
        if params["bootstrap"]:
            rows = rng.integers(0, n, size=n)
            trees.append(grow_tree(X[rows], y[rows], n_classes, rng=rng, **kwargs))
        else:
            trees.append(grow_tree(X, y, n_classes, rng=rng, **kwargs))
    return Forest.stack(trees)


@numba.njit(cache=True)
def _forest_votes(feature, threshold, left, right, label, X, n_classes):
    T = feature.shape[0]
    counts = np.zeros((X.shape[0], n_classes))
    for t in range(T):
        for i in range(X.shape[0]):
            node = 0
            while feature[t, node] >= 0:
                if X[i, feature[t, node]] <= threshold[t, node]:
                    node = left[t, node]
                else:
                    node = right[t, node]
            counts[i, label[t, node]] += 1.0
    return counts


@dataclass(frozen=True, eq=False)
class Forest:
    """Trees padded into 2-D node arrays, one row per tree."""

    trees: tuple[Tree, ...]
    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    label: np.ndarray

    @classmethod
    def stack(cls, trees):
        width = max(t.node_count for t in trees)
        T = len(trees)
        feature = np.full((T, width), -1, np.int64)
        threshold = np.zeros((T, width))
        left = np.full((T, width), -1, np.int64)
        right = np.full((T, width), -1, np.int64)
        label = np.zeros((T, width), np.int64)
        for i, t in enumerate(trees):
            k = t.node_count
            feature[i, :k] = t.feature
            threshold[i, :k] = t.threshold
            left[i, :k] = t.left
            right[i, :k] = t.right
            label[i, :k] = t.label
        return cls(tuple(trees), feature, threshold, left, right, label)

    def votes(self, X, n_classes):
        X = np.ascontiguousarray(X, dtype=np.float64)
        return _forest_votes(self.feature, self.threshold, self.left, self.right, self.label, X, n_classes)


def predict_random_forest(state: Forest, X, n_classes):
    # majority vote; argmax keeps the lower class on ties
    return np.argmax(state.votes(X, n_classes), axis=1)


@dataclass(frozen=True, eq=False)
class Boosted:
    stumps: tuple[Tree, ...]
    alphas: np.ndarray


def fit_ada_boost(X, y, n_classes, params, rng):
    """SAMME: stage weight lr * (log((1-err)/err) + log(K-1))."""
    n = X.shape[0]
    K = n_classes
    lr = params["learning_rate"]
    w = np.full(n, 1.0 / n)
    stumps, alphas = [], []
    for _ in range(params["n_estimators"]):
        stump = grow_tree(X, y, K, sample_weight=w, max_depth=1)
        miss = stump.predict(X) != y
        err = float(np.sum(w[miss]) / np.sum(w))
        if err <= 0.0:
            stumps.append(stump)
            alphas.append(1.0)
            break
        if err >= 1.0 - 1.0 / K:
            if not stumps:
                stumps.append(stump)
                alphas.append(1.0)
            break
        alpha = lr * (math.log((1.0 - err) / err) + math.log(K - 1.0))
        stumps.append(stump)
        alphas.append(alpha)
        w = w * np.exp(alpha * miss)
        w /= w.sum()
    return Boosted(tuple(stumps), np.array(alphas))


def predict_ada_boost(state: Boosted, X, n_classes):
    X = np.ascontiguousarray(X)
    votes = np.column_stack([s.predict(X) for s in state.stumps])
    return vote(votes, n_classes, state.alphas)
