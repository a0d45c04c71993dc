"""The classifier suite: all share fit / predict / predict_scores and report
``param_count_`` (trainable scalars) and ``stored_samples_``."""
from ._base import ConvergenceError, ScoringClassifier
from .io import KINDS, model_from_dict, model_to_dict
from .knn import KNearest
from .logistic import LogisticOVR, logistic_loss_grad
from .naive_bayes import GaussianNB
from .svm import LinearSVMOVR
from .tree import GiniTree

DEFAULT_CONFIGS = {
    "svm": {"lam": 1e-3, "epochs": 20},
    "logistic": {"learning_rate": 0.1, "n_iter": 500, "l2": 1e-4},
    "tree": {"max_depth": 8, "min_samples_leaf": 2},
    "knn": {"n_neighbors": 5},
    "gnb": {},
}


def make_classifier(kind: str, **config):
    if kind not in KINDS:
        raise ValueError(f"unknown classifier kind {kind!r}; choose from {sorted(KINDS)}")
    return KINDS[kind](**{**DEFAULT_CONFIGS[kind], **config})


def fit_logistic(X, y, **config) -> LogisticOVR:
    return make_classifier("logistic", **config).fit(X, y)


def fit_svm(X, y, **config) -> LinearSVMOVR:
    return make_classifier("svm", **config).fit(X, y)


def fit_tree(X, y, **config) -> GiniTree:
    return make_classifier("tree", **config).fit(X, y)


def fit_knn(X, y, **config) -> KNearest:
    return make_classifier("knn", **config).fit(X, y)


def fit_gnb(X, y, **config) -> GaussianNB:
    return make_classifier("gnb", **config).fit(X, y)


def predict(model, X):
    return model.predict(X)


def predict_scores(model, X):
    return model.predict_proba(X)


__all__ = [
    "ConvergenceError",
    "DEFAULT_CONFIGS",
    "GaussianNB",
    "GiniTree",
    "KINDS",
    "KNearest",
    "LinearSVMOVR",
    "LogisticOVR",
    "ScoringClassifier",
    "fit_gnb",
    "fit_knn",
    "fit_logistic",
    "fit_svm",
    "fit_tree",
    "logistic_loss_grad",
    "make_classifier",
    "model_from_dict",
    "model_to_dict",
    "predict",
    "predict_scores",
]
