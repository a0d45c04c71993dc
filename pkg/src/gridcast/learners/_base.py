from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y


class ConvergenceError(RuntimeError):
    """Training produced a non-finite loss."""


class ScoringClassifier(ClassifierMixin, BaseEstimator):
    """Shared plumbing: input checks, class bookkeeping and argmax prediction.

    Subclasses implement ``_fit(X, y_index)`` and ``_scores(X)`` returning a
    row-stochastic ``(n, n_classes)`` array.
    """

    min_classes = 1

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        self.classes_, y_index = np.unique(y, return_inverse=True)
        if len(self.classes_) < self.min_classes:
            raise ValueError(f"{type(self).__name__} needs at least {self.min_classes} classes, got {len(self.classes_)}")
        self.n_features_in_ = X.shape[1]
        self.stored_samples_ = 0
        self._fit(X, y_index)
        return self

    def _validate(self, X):
        check_is_fitted(self, "classes_")
        X = check_array(np.atleast_2d(X), dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def predict_proba(self, X):
        return self._scores(self._validate(X))

    predict_scores = predict_proba

    def predict(self, X):
        # np.argmax keeps the first maximum, i.e. the lowest class index on ties
        return self.classes_[np.argmax(self.predict_proba(X), axis=1)]


def softmax(Z):
    Z = Z - Z.max(axis=1, keepdims=True)
    E = np.exp(Z)
    return E / E.sum(axis=1, keepdims=True)


def one_hot(y_index, n_classes):
    Y = np.zeros((len(y_index), n_classes))
    Y[np.arange(len(y_index)), y_index] = 1.0
    return Y
