"""Weighted vote fusion and the entropy-based agreement index."""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, clone
from sklearn.utils.validation import check_is_fitted, check_X_y


@dataclass(frozen=True)
class VoteDistribution:
    """Row ``n`` holds the weight share each class received on sample ``n``."""

    p: np.ndarray  # (N, K)

    @property
    def n_classes(self) -> int:
        return self.p.shape[1]


@dataclass(frozen=True)
class ConfidenceReport:
    entropy: np.ndarray  # per-sample, nats
    confidence: np.ndarray  # per-sample, in [0, 1]
    index: float  # mean confidence
    n_classifiers: int

    def to_dict(self, fused=None, flagged=None) -> dict:
        per = []
        for i, c in enumerate(self.confidence):
            row = {"confidence": float(c)}
            if fused is not None:
                row["fused_class"] = int(fused[i])
            if flagged is not None:
                row["flagged"] = bool(flagged[i])
            per.append(row)
        return {"E": float(self.index), "M": self.n_classifiers, "per_sample": per}

    def to_json(self, fused=None, flagged=None) -> str:
        return json.dumps(self.to_dict(fused, flagged), indent=2)


def _check_weights(weights, m):
    w = np.full(m, 1.0 / m) if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (m,):
        raise ValueError(f"{len(w)} weights for {m} classifiers")
    if (w <= 0).any() or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("weights must be positive and sum to 1")
    return w


def fuse_votes(votes, weights=None, n_classes: int | None = None):
    """Weighted plurality over class-index votes of shape ``(N, M)``.

    Returns the fused class per sample (ties to the lowest class index) and
    the vote distribution.
    """
    votes = np.asarray(votes, dtype=int)
    if votes.ndim != 2 or votes.size == 0:
        raise ValueError("votes must be a nonempty (samples, classifiers) array")
    N, M = votes.shape
    if M < 2:
        raise ValueError("fusion needs at least 2 classifiers")
    w = _check_weights(weights, M)
    K = int(votes.max()) + 1 if n_classes is None else int(n_classes)
    if votes.min() < 0 or votes.max() >= K:
        raise ValueError("vote outside the class range")
    p = np.zeros((N, K))
    np.add.at(p, (np.repeat(np.arange(N), M), votes.ravel()), np.tile(w, N))
    return np.argmax(p, axis=1), VoteDistribution(p)


def confidence_index(dist: VoteDistribution | np.ndarray, n_classifiers: int) -> ConfidenceReport:
    """``1 - H_n / log M`` per sample, with ``H_n`` the vote entropy; the index is the mean."""
    if n_classifiers < 2:
        raise ValueError("need at least 2 classifiers (log M must be nonzero)")
    p = dist.p if isinstance(dist, VoteDistribution) else np.asarray(dist, dtype=float)
    if (p < 0).any() or not np.allclose(p.sum(axis=1), 1.0, atol=1e-9, rtol=0):
        raise ValueError("vote distribution rows must be nonnegative and sum to 1")
    plogp = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    H = -plogp.sum(axis=1)
    conf = np.clip(1.0 - H / np.log(n_classifiers), 0.0, 1.0)
    return ConfidenceReport(H, conf, float(conf.mean()), int(n_classifiers))


def roc_curve(scores, truth):
    """ROC points from a descending threshold sweep and the trapezoid AUC.

    Tied scores form one threshold step. Returns ``(fpr, tpr, auc)``.
    """
    scores = np.asarray(scores, dtype=float)
    truth = np.asarray(truth).astype(bool)
    P, N = int(truth.sum()), int((~truth).sum())
    if P == 0 or N == 0:
        raise ValueError("ROC needs both positive and negative samples")
    order = np.argsort(-scores, kind="stable")
    s, t = scores[order], truth[order]
    last = np.r_[np.flatnonzero(s[1:] != s[:-1]), len(s) - 1]
    tp = np.cumsum(t)[last]
    fp = np.cumsum(~t)[last]
    tpr = np.r_[0.0, tp / P]
    fpr = np.r_[0.0, fp / N]
    auc = float(np.sum(np.diff(fpr) * (tpr[1:] + tpr[:-1]) / 2.0))
    return fpr, tpr, auc


def roc_csv(fpr, tpr, auc) -> str:
    lines = [f"# auc={auc!r}", "fpr,tpr"] + [f"{a!r},{b!r}" for a, b in zip(fpr.tolist(), tpr.tolist())]
    return "\n".join(lines) + "\n"


@dataclass(frozen=True)
class Decision:
    fused: np.ndarray
    confidence: np.ndarray
    accepted: np.ndarray

    @property
    def flagged(self) -> np.ndarray:
        return ~self.accepted


def decide(fused, confidence, threshold: float) -> Decision:
    """Accept a forecast when its confidence reaches ``threshold``, else flag it."""
    if not 0.0 <= threshold <= 1.0:
        raise ValueError("threshold must lie in [0, 1]")
    fused = np.atleast_1d(np.asarray(fused))
    conf = np.atleast_1d(np.asarray(confidence, dtype=float))
    return Decision(fused, conf, conf >= threshold)


class VotingFusion(ClassifierMixin, BaseEstimator):
    """Fit several classifiers on the same data and fuse their votes.

    ``weights`` is ``"uniform"``, ``"accuracy"`` (proportional to accuracy on
    a held-out ``validation_fraction`` of the training data, after which the
    members are refit on everything) or an explicit sequence.
    """

    def __init__(self, estimators, weights="uniform", threshold=0.5, validation_fraction=0.25, seed=0):
        self.estimators = estimators
        self.weights = weights
        self.threshold = threshold
        self.validation_fraction = validation_fraction
        self.seed = seed

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        if len(self.estimators) < 2:
            raise ValueError("fusion needs at least 2 estimators")
        self.classes_ = np.unique(y)
        self.n_features_in_ = X.shape[1]
        M = len(self.estimators)
        if isinstance(self.weights, str) and self.weights == "accuracy":
            w = self._accuracy_weights(X, y)
        elif isinstance(self.weights, str):
            if self.weights != "uniform":
                raise ValueError(f"unknown weights mode {self.weights!r}")
            w = np.full(M, 1.0 / M)
        else:
            w = np.asarray(self.weights, dtype=float)
            w = w / w.sum()
        self.weights_ = _check_weights(w, M)
        self.named_estimators_ = {name: clone(est).fit(X, y) for name, est in self.estimators}
        return self

    def _accuracy_weights(self, X, y):
        rng = np.random.default_rng(self.seed)
        perm = rng.permutation(len(y))
        n_val = max(1, int(round(self.validation_fraction * len(y))))
        val, tr = perm[:n_val], perm[n_val:]
        acc = []
        for _, est in self.estimators:
            try:
                acc.append(float(np.mean(clone(est).fit(X[tr], y[tr]).predict(X[val]) == y[val])))
            except ValueError:
                acc.append(0.0)
        acc = np.maximum(np.asarray(acc), 1e-6)
        return acc / acc.sum()

    @property
    def param_count_(self) -> int:
        return int(sum(m.param_count_ for m in self.named_estimators_.values()))

    def member_predictions(self, X) -> dict[str, np.ndarray]:
        check_is_fitted(self, "named_estimators_")
        return {name: m.predict(X) for name, m in self.named_estimators_.items()}

    def _votes(self, X):
        preds = self.member_predictions(X)
        labels = np.column_stack(list(preds.values()))
        return np.searchsorted(self.classes_, labels)

    def vote_distribution(self, X) -> VoteDistribution:
        _, dist = fuse_votes(self._votes(X), self.weights_, len(self.classes_))
        return dist

    def predict(self, X):
        fused, _ = fuse_votes(self._votes(X), self.weights_, len(self.classes_))
        return self.classes_[fused]

    def predict_proba(self, X):
        return self.vote_distribution(X).p

    def confidence(self, X) -> ConfidenceReport:
        return confidence_index(self.vote_distribution(X), len(self.estimators))

    def decide(self, X) -> Decision:
        dist = self.vote_distribution(X)
        report = confidence_index(dist, len(self.estimators))
        return decide(self.classes_[np.argmax(dist.p, axis=1)], report.confidence, self.threshold)
