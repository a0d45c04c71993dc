"""Standardization and principal component projection."""
from __future__ import annotations

import numpy as np
from scipy import linalg
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

# below this many matrix entries the thin SVD is cheap enough to run directly
_EXACT_SVD_LIMIT = 250_000
_GRAM_RTOL = 100.0


def _check_dim(est, X):
    if X.shape[1] != est.n_features_in_:
        raise ValueError(f"X has {X.shape[1]} features, but {type(est).__name__} was fitted with {est.n_features_in_}")


class Standardizer(TransformerMixin, BaseEstimator):
    """Per-feature centering and scaling by the population standard deviation.

    Scales below ``floor`` are replaced by 1 so constant columns map to 0.
    """

    def __init__(self, floor=1e-12):
        self.floor = floor

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        if X.shape[0] < 2:
            raise ValueError("standardization needs at least 2 samples")
        self.n_features_in_ = X.shape[1]
        self.mean_ = X.mean(axis=0)
        std = X.std(axis=0)
        self.scale_ = np.where(std < self.floor, 1.0, std)
        return self

    def transform(self, X):
        check_is_fitted(self, "scale_")
        X = check_array(X, dtype=np.float64)
        _check_dim(self, X)
        return (X - self.mean_) / self.scale_

    def inverse_transform(self, X):
        check_is_fitted(self, "scale_")
        return np.asarray(X) * self.scale_ + self.mean_


def canonical_signs(components: np.ndarray) -> np.ndarray:
    """Flip each row so its largest-magnitude entry is positive."""
    idx = np.argmax(np.abs(components), axis=1)
    signs = np.sign(components[np.arange(len(components)), idx])
    signs[signs == 0] = 1.0
    return components * signs[:, None]


def _thin_svd(Xc, k):
    _, S, Vt = np.linalg.svd(Xc, full_matrices=False)
    return S, Vt[:k]


def _gram_svd(Xc, k):
    """Singular values and top right vectors via the smaller Gram matrix."""
    n, d = Xc.shape
    if n <= d:
        w, U = linalg.eigh(Xc @ Xc.T, driver="evd", overwrite_a=True)
        S = np.sqrt(np.clip(w[::-1], 0.0, None))
        # Gram eigenvalues carry ~n*eps*S0^2 absolute error, so small S are noise
        if S[k - 1] <= _GRAM_RTOL * np.sqrt(n * np.finfo(float).eps) * max(S[0], 1e-300):
            return None
        Uk = np.ascontiguousarray(U[:, ::-1][:, :k].T)
        Vt = (Uk @ Xc) / S[:k, None]
    else:
        w, V = linalg.eigh(Xc.T @ Xc, driver="evd", overwrite_a=True)
        S = np.sqrt(np.clip(w[::-1], 0.0, None))
        Vt = np.ascontiguousarray(V[:, ::-1][:, :k].T)
    return S, Vt


class PCA(TransformerMixin, BaseEstimator):
    """Principal component projection of centered data.

    ``components_`` holds the retained right singular vectors as rows
    (shape ``(k, d)``), sign-canonicalized so each row's largest-magnitude
    entry is positive. ``singular_values_`` keeps all ``min(n, d)`` values.
    With ``whiten=True`` the projections are divided by their training
    standard deviation.
    """

    def __init__(self, n_components=50, whiten=False):
        self.n_components = n_components
        self.whiten = whiten

    def fit(self, X, y=None):
        X = check_array(X, dtype=np.float64)
        n, d = X.shape
        k = int(self.n_components)
        if not 1 <= k <= min(n, d):
            raise ValueError(f"n_components={k} must lie in [1, min(n, d)] = [1, {min(n, d)}]")
        self.n_features_in_ = d
        self.mean_ = X.mean(axis=0)
        Xc = X - self.mean_
        result = None if n * d <= _EXACT_SVD_LIMIT else _gram_svd(Xc, k)
        S, Vt = result if result is not None else _thin_svd(Xc, k)
        self.singular_values_ = S[: min(n, d)]
        self.components_ = canonical_signs(Vt)
        self.n_components_ = k
        self.n_samples_ = n
        self.explained_variance_ = S[:k] ** 2 / max(n - 1, 1)
        return self

    def _scale(self):
        if not self.whiten:
            return np.ones(self.n_components_)
        sd = np.sqrt(self.explained_variance_)
        return np.where(sd > 1e-12, sd, 1.0)

    def transform(self, X):
        check_is_fitted(self, "components_")
        X = check_array(X, dtype=np.float64)
        _check_dim(self, X)
        return ((X - self.mean_) @ self.components_.T) / self._scale()

    def inverse_transform(self, Y):
        check_is_fitted(self, "components_")
        return (np.asarray(Y) * self._scale()) @ self.components_ + self.mean_


def fit_standardizer(train_features) -> Standardizer:
    return Standardizer().fit(train_features)


def fit_pca(train_features, k: int) -> PCA:
    X = np.asarray(train_features, dtype=float)
    if not np.isfinite(X).all():
        raise ValueError("PCA input contains non-finite values")
    return PCA(n_components=k).fit(X)


def project(model: PCA, features) -> np.ndarray:
    """``(features - mean) @ V``; ``V`` has the principal directions as columns."""
    return model.transform(np.atleast_2d(features))


def pca_to_dict(pca: PCA, standardizer: Standardizer | None = None) -> dict:
    """JSON-ready record; ``components`` is the d x k direction matrix, row-major."""
    d = pca.n_features_in_
    return {
        "d": d,
        "k": pca.n_components_,
        "mean": (standardizer.mean_ if standardizer is not None else np.zeros(d)).tolist(),
        "scale": (standardizer.scale_ if standardizer is not None else np.ones(d)).tolist(),
        "center": pca.mean_.tolist(),
        "components": pca.components_.T.tolist(),
        "singular_values": pca.singular_values_.tolist(),
        "explained_variance": pca.explained_variance_.tolist(),
        "whiten": bool(pca.whiten),
    }


def pca_from_dict(record: dict) -> tuple[PCA, Standardizer]:
    V = np.asarray(record["components"], dtype=float)
    if V.shape != (record["d"], record["k"]):
        raise ValueError("components shape does not match d x k")
    pca = PCA(n_components=record["k"], whiten=record.get("whiten", False))
    pca.n_features_in_ = record["d"]
    pca.mean_ = np.asarray(record["center"], dtype=float)
    pca.components_ = V.T.copy()
    pca.n_components_ = record["k"]
    pca.singular_values_ = np.asarray(record["singular_values"], dtype=float)
    pca.explained_variance_ = np.asarray(record["explained_variance"], dtype=float)
    std = Standardizer()
    std.n_features_in_ = record["d"]
    std.mean_ = np.asarray(record["mean"], dtype=float)
    std.scale_ = np.asarray(record["scale"], dtype=float)
    return pca, std
