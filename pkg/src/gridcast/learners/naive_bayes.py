from __future__ import annotations

import numpy as np
from scipy.special import logsumexp

from ._base import ScoringClassifier

VAR_FLOOR = 1e-9


class GaussianNB(ScoringClassifier):
    """Gaussian naive Bayes with per-class feature means, variances and priors.

    Every class needs at least two samples. With ``rare_classes="drop"``
    classes below that are left out of the model instead of raising; they
    can then never be predicted.
    """

    def __init__(self, rare_classes="error"):
        self.rare_classes = rare_classes

    def _fit(self, X, y_index):
        counts = np.bincount(y_index, minlength=len(self.classes_))
        rare = counts < 2
        if rare.any():
            if self.rare_classes != "drop":
                raise ValueError(f"classes {self.classes_[rare].tolist()} have fewer than 2 samples")
            keep = ~rare[y_index]
            X, y_index = X[keep], np.searchsorted(np.flatnonzero(~rare), y_index[keep])
            self.dropped_classes_ = self.classes_[rare]
            self.classes_ = self.classes_[~rare]
            counts = counts[~rare]
        else:
            self.dropped_classes_ = self.classes_[:0]
        if len(self.classes_) == 0:
            raise ValueError("no class has at least 2 samples")
        C, k = len(self.classes_), X.shape[1]
        self.theta_ = np.vstack([X[y_index == c].mean(axis=0) for c in range(C)])
        self.var_ = np.maximum(np.vstack([X[y_index == c].var(axis=0) for c in range(C)]), VAR_FLOOR)
        self.class_prior_ = counts / counts.sum()
        self.param_count_ = 2 * k * C + C

    def joint_log_likelihood(self, X):
        ll = -0.5 * (np.log(2 * np.pi * self.var_).sum(axis=1)[None, :]
                     + (((X[:, None, :] - self.theta_[None]) ** 2) / self.var_[None]).sum(axis=2))
        return ll + np.log(self.class_prior_)

    def _scores(self, X):
        jll = self.joint_log_likelihood(X)
        return np.exp(jll - logsumexp(jll, axis=1, keepdims=True))
