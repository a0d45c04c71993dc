from __future__ import annotations

import numpy as np

from ._base import ScoringClassifier, softmax


class LinearSVMOVR(ScoringClassifier):
    """One-vs-rest linear SVMs by stochastic subgradient descent (Pegasos).

    Minimizes ``lam/2 |w|^2 + mean hinge`` per class with step ``1/(lam t)``;
    the bias rides along as a constant input feature. All class problems
    share one shuffled sample stream, so a run is fixed by ``seed``. Scores
    are the softmax of the margins.
    """

    min_classes = 2

    def __init__(self, lam=1e-3, epochs=20, seed=0):
        self.lam = lam
        self.epochs = epochs
        self.seed = seed

    def fit(self, X, y):
        if not self.lam > 0:
            raise ValueError("lam must be > 0")
        return super().fit(X, y)

    def _fit(self, X, y_index):
        n, k = X.shape
        C = len(self.classes_)
        Xa = np.hstack([X, np.ones((n, 1))])
        T = np.where(np.arange(C)[None, :] == y_index[:, None], 1.0, -1.0)
        rng = np.random.default_rng(self.seed)
        # W = scale * V keeps the shrink step O(1)
        V = np.zeros((C, k + 1))
        scale = 1.0
        t = 0
        for _ in range(int(self.epochs)):
            for i in rng.permutation(n):
                t += 1
                eta = 1.0 / (self.lam * t)
                x, ti = Xa[i], T[i]
                viol = ti * (V @ x) * scale < 1.0
                shrink = 1.0 - eta * self.lam
                if shrink <= 0.0:
                    V[:] = 0.0
                    scale = 1.0
                else:
                    scale *= shrink
                if viol.any():
                    V[viol] += (eta / scale) * ti[viol, None] * x
                if scale < 1e-9:
                    V *= scale
                    scale = 1.0
        W = V * scale
        self.coef_ = W[:, :k].copy()
        self.intercept_ = W[:, k].copy()
        self.param_count_ = (k + 1) * C

    def decision_function(self, X):
        X = self._validate(X)
        return X @ self.coef_.T + self.intercept_

    def _scores(self, X):
        return softmax(X @ self.coef_.T + self.intercept_)
