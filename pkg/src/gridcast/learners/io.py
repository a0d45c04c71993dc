"""JSON records for fitted classifiers, tagged by kind and format version."""
from __future__ import annotations

import numpy as np

from .knn import KNearest
from .logistic import LogisticOVR
from .naive_bayes import GaussianNB
from .svm import LinearSVMOVR
from .tree import GiniTree

FORMAT_VERSION = 1

KINDS = {
    "logistic": LogisticOVR,
    "svm": LinearSVMOVR,
    "tree": GiniTree,
    "knn": KNearest,
    "gnb": GaussianNB,
}
_KIND_OF = {cls: kind for kind, cls in KINDS.items()}


def _classes(values):
    return np.asarray(values)


def model_to_dict(model) -> dict:
    kind = _KIND_OF[type(model)]
    rec = {
        "kind": kind,
        "version": FORMAT_VERSION,
        "params": model.get_params(),
        "classes": model.classes_.tolist(),
        "n_features": int(model.n_features_in_),
        "param_count": int(model.param_count_),
        "stored_samples": int(model.stored_samples_),
    }
    if kind in ("logistic", "svm"):
        rec["coef"] = model.coef_.tolist()
        rec["intercept"] = model.intercept_.tolist()
    elif kind == "tree":
        rec["tree"] = model.to_nested()
    elif kind == "knn":
        rec["samples"] = model.fit_X_.tolist()
        rec["sample_classes"] = model.fit_y_.tolist()
    else:
        rec["means"] = model.theta_.tolist()
        rec["variances"] = model.var_.tolist()
        rec["priors"] = model.class_prior_.tolist()
        rec["dropped_classes"] = model.dropped_classes_.tolist()
    return rec


def model_from_dict(rec: dict):
    if rec.get("version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {rec.get('version')!r}")
    kind = rec.get("kind")
    if kind not in KINDS:
        raise ValueError(f"unknown model kind {kind!r}")
    model = KINDS[kind](**rec["params"])
    model.classes_ = _classes(rec["classes"])
    model.n_features_in_ = rec["n_features"]
    model.stored_samples_ = rec["stored_samples"]
    if kind in ("logistic", "svm"):
        model.coef_ = np.asarray(rec["coef"], dtype=float)
        model.intercept_ = np.asarray(rec["intercept"], dtype=float)
    elif kind == "tree":
        model._load_nested(rec["tree"])
    elif kind == "knn":
        model.fit_X_ = np.asarray(rec["samples"], dtype=float)
        model.fit_y_ = np.asarray(rec["sample_classes"], dtype=int)
    else:
        model.theta_ = np.asarray(rec["means"], dtype=float)
        model.var_ = np.asarray(rec["variances"], dtype=float)
        model.class_prior_ = np.asarray(rec["priors"], dtype=float)
        model.dropped_classes_ = _classes(rec["dropped_classes"])
    model.param_count_ = rec["param_count"]
    return model
