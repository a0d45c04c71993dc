from __future__ import annotations

import numpy as np

from ._base import ScoringClassifier, one_hot

LEAF = -1


def _best_split(X, Y, min_leaf):
    """Lowest weighted-Gini axis split of one node.

    Returns ``(impurity, feature, threshold)`` or None. Ties go to the lowest
    feature index, then the lowest threshold.
    """
    m, k = X.shape
    if m < 2 * min_leaf:
        return None
    order = np.argsort(X, axis=0, kind="stable")
    Xs = np.take_along_axis(X, order, axis=0)
    left = np.cumsum(Y[order], axis=0)[:-1]  # (m-1, k, C): counts in the first i+1 samples
    total = left[-1] + Y[order[-1]]
    right = total[None] - left
    nl = np.arange(1, m)[:, None]
    nr = m - nl
    imp = (nl - (left ** 2).sum(axis=2) / nl) + (nr - (right ** 2).sum(axis=2) / nr)
    valid = (Xs[:-1] < Xs[1:]) & (nl >= min_leaf) & (nr >= min_leaf)
    if not valid.any():
        return None
    imp = np.where(valid, imp, np.inf)
    best = imp.min()
    # column-major scan: first feature, then first (lowest) threshold position
    hits = np.argwhere((imp.T <= best + 1e-12 * m))
    f, i = int(hits[0, 0]), int(hits[0, 1])
    lo, hi = Xs[i, f], Xs[i + 1, f]
    thr = 0.5 * (lo + hi)
    if not lo <= thr < hi:
        thr = lo
    return float(best), f, float(thr)


class GiniTree(ScoringClassifier):
    """CART classifier with greedy axis-aligned Gini splits.

    A node splits only if that strictly lowers impurity and both children
    keep ``min_samples_leaf`` samples. Leaves score by class frequencies.
    Nodes are stored in pre-order as flat arrays.
    """

    def __init__(self, max_depth=8, min_samples_leaf=2):
        self.max_depth = max_depth
        self.min_samples_leaf = min_samples_leaf

    def _fit(self, X, y_index):
        n = len(X)
        if n < self.min_samples_leaf:
            raise ValueError(f"need at least min_samples_leaf={self.min_samples_leaf} samples")
        C = len(self.classes_)
        Y = one_hot(y_index, C)
        feature, threshold, left, right, value = [], [], [], [], []

        def grow(idx, depth):
            node = len(feature)
            counts = Y[idx].sum(axis=0)
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(counts)
            if depth >= self.max_depth or (counts > 0).sum() <= 1:
                return node
            split = _best_split(X[idx], Y[idx], self.min_samples_leaf)
            parent = len(idx) - (counts ** 2).sum() / len(idx)
            if split is None or not split[0] < parent - 1e-12:
                return node
            _, f, thr = split
            go_left = X[idx, f] <= thr
            feature[node], threshold[node] = f, thr
            left[node] = grow(idx[go_left], depth + 1)
            right[node] = grow(idx[~go_left], depth + 1)
            return node

        grow(np.arange(n), 0)
        self.feature_ = np.array(feature, dtype=int)
        self.threshold_ = np.array(threshold)
        self.children_left_ = np.array(left, dtype=int)
        self.children_right_ = np.array(right, dtype=int)
        self.value_ = np.array(value)
        internal = int((self.feature_ != LEAF).sum())
        self.n_leaves_ = len(self.feature_) - internal
        self.param_count_ = 2 * internal + self.n_leaves_

    def apply(self, X):
        X = self._validate(X)
        node = np.zeros(len(X), dtype=int)
        while True:
            active = self.feature_[node] != LEAF
            if not active.any():
                return node
            a = np.flatnonzero(active)
            f = self.feature_[node[a]]
            go_left = X[a, f] <= self.threshold_[node[a]]
            node[a] = np.where(go_left, self.children_left_[node[a]], self.children_right_[node[a]])

    def _scores(self, X):
        v = self.value_[self.apply(X)]
        return v / v.sum(axis=1, keepdims=True)

    def to_nested(self, node=0) -> dict:
        if self.feature_[node] == LEAF:
            return {"leaf": True, "counts": self.value_[node].tolist()}
        return {
            "leaf": False,
            "feature": int(self.feature_[node]),
            "threshold": float(self.threshold_[node]),
            "left": self.to_nested(int(self.children_left_[node])),
            "right": self.to_nested(int(self.children_right_[node])),
        }

    def _load_nested(self, record):
        feature, threshold, left, right, value = [], [], [], [], []
        C = len(self.classes_)

        def walk(rec):
            node = len(feature)
            feature.append(LEAF)
            threshold.append(0.0)
            left.append(LEAF)
            right.append(LEAF)
            value.append(np.zeros(C))
            if rec["leaf"]:
                value[node] = np.asarray(rec["counts"], dtype=float)
            else:
                feature[node], threshold[node] = rec["feature"], rec["threshold"]
                left[node] = walk(rec["left"])
                right[node] = walk(rec["right"])
                value[node] = value[left[node]] + value[right[node]]
            return node

        walk(record)
        self.feature_ = np.array(feature, dtype=int)
        self.threshold_ = np.array(threshold)
        self.children_left_ = np.array(left, dtype=int)
        self.children_right_ = np.array(right, dtype=int)
        self.value_ = np.array(value)
        internal = int((self.feature_ != LEAF).sum())
        self.n_leaves_ = len(self.feature_) - internal
        self.param_count_ = 2 * internal + self.n_leaves_
