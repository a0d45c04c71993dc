from __future__ import annotations

import numpy as np

from ._base import ScoringClassifier

_CHUNK = 64


def _nearest(dist: np.ndarray, k: int) -> np.ndarray:
    """Column indices of the ``k`` smallest entries per row, equal values by lower index."""
    if k >= dist.shape[1]:
        return np.argsort(dist, axis=1, kind="stable")[:, :k]
    part = np.argpartition(dist, k - 1, axis=1)[:, :k]
    pd = np.take_along_axis(dist, part, axis=1)
    out = np.take_along_axis(part, np.lexsort((part, pd)), axis=1)
    # a value tied with the k-th may have been left out in favor of a higher index
    kth = pd.max(axis=1, keepdims=True)
    for r in np.flatnonzero((dist == kth).sum(axis=1) > (pd == kth).sum(axis=1)):
        out[r] = np.argsort(dist[r], kind="stable")[:k]
    return out


class KNearest(ScoringClassifier):
    """Euclidean k-nearest-neighbor vote.

    Equal distances go to the lower training index (stable sort); scores are
    neighbor vote fractions, and vote ties resolve to the lower class index.
    """

    def __init__(self, n_neighbors=5):
        self.n_neighbors = n_neighbors

    def _fit(self, X, y_index):
        if not 1 <= self.n_neighbors <= len(X):
            raise ValueError(f"n_neighbors={self.n_neighbors} must lie in [1, n_samples={len(X)}]")
        self.fit_X_ = X.copy()
        self.fit_y_ = y_index
        self.param_count_ = 0
        self.stored_samples_ = len(X)

    def kneighbors(self, X):
        X = self._validate(X)
        out = np.empty((len(X), self.n_neighbors), dtype=int)
        for s in range(0, len(X), _CHUNK):
            diff = X[s:s + _CHUNK, None, :] - self.fit_X_[None, :, :]
            dist = np.einsum("ijk,ijk->ij", diff, diff)
            out[s:s + _CHUNK] = _nearest(dist, self.n_neighbors)
        return out

    def _scores(self, X):
        idx = self.kneighbors(X)
        C = len(self.classes_)
        votes = np.zeros((len(X), C))
        np.add.at(votes, (np.repeat(np.arange(len(X)), idx.shape[1]), self.fit_y_[idx].ravel()), 1.0)
        return votes / self.n_neighbors
