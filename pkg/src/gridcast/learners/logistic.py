from __future__ import annotations

import numpy as np
from scipy.special import expit

from ._base import ConvergenceError, ScoringClassifier, one_hot


def logistic_loss_grad(w, b, X, y, l2):
    """Mean binary cross-entropy plus ``l2/2 * |w|^2`` and its gradient.

    ``y`` is a 0/1 vector; the bias is not regularized.
    """
    z = X @ w + b
    # log(1 + e^z) - y z, evaluated stably
    loss = np.mean(np.logaddexp(0.0, z) - y * z) + 0.5 * l2 * w @ w
    r = expit(z) - y
    return loss, X.T @ r / len(y) + l2 * w, r.mean()


class LogisticOVR(ScoringClassifier):
    """One-vs-rest logistic regression trained by full-batch gradient descent.

    Weights start at zero. Scores are the per-class sigmoids rescaled to sum
    to one.
    """

    min_classes = 2

    def __init__(self, learning_rate=0.1, n_iter=500, l2=1e-4):
        self.learning_rate = learning_rate
        self.n_iter = n_iter
        self.l2 = l2

    def _fit(self, X, y_index):
        n, k = X.shape
        C = len(self.classes_)
        Y = one_hot(y_index, C)
        W = np.zeros((k, C))
        b = np.zeros(C)
        with np.errstate(over="ignore", invalid="ignore"):
            for _ in range(int(self.n_iter)):
                R = expit(X @ W + b) - Y
                W -= self.learning_rate * (X.T @ R / n + self.l2 * W)
                b -= self.learning_rate * R.mean(axis=0)
            Z = X @ W + b
            losses = np.mean(np.logaddexp(0.0, Z) - Y * Z, axis=0) + 0.5 * self.l2 * (W * W).sum(axis=0)
        bad = np.flatnonzero(~np.isfinite(losses))
        if bad.size:
            raise ConvergenceError(f"non-finite loss for class {self.classes_[bad[0]]!r}; lower the learning rate")
        self.coef_ = W.T.copy()
        self.intercept_ = b
        self.loss_ = losses
        self.param_count_ = (k + 1) * C

    def decision_function(self, X):
        X = self._validate(X)
        return X @ self.coef_.T + self.intercept_

    def _scores(self, X):
        P = expit(X @ self.coef_.T + self.intercept_)
        return P / P.sum(axis=1, keepdims=True)
