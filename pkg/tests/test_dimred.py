import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import subspace_angles

import oracles
from gridcast.dimred import PCA, Standardizer, fit_pca, fit_standardizer, pca_from_dict, pca_to_dict, project


def test_standardizer_hand_case():
    s = fit_standardizer(np.array([[1.0, 5.0], [3.0, 5.0]]))
    assert s.mean_.tolist() == [2.0, 5.0]
    assert s.scale_.tolist() == [1.0, 1.0]  # second column is constant: floored to 1
    assert np.array_equal(s.transform([[1.0, 5.0], [3.0, 5.0]]), [[-1.0, 0.0], [1.0, 0.0]])


def test_standardized_training_columns_are_centered(rng):
    X = rng.normal(3.0, 2.0, size=(40, 7))
    Z = fit_standardizer(X).transform(X)
    assert np.abs(Z.mean(axis=0)).max() < 1e-10
    np.testing.assert_allclose(Z.std(axis=0), 1.0)


def test_standardizer_errors(rng):
    with pytest.raises(ValueError):
        fit_standardizer(np.ones((1, 3)))
    s = fit_standardizer(rng.normal(size=(5, 3)))
    with pytest.raises(ValueError):
        s.transform(np.ones((2, 4)))


def test_pca_hand_case():
    X = np.array([[1.0, 0.0], [-1.0, 0.0], [2.0, 0.0], [-2.0, 0.0]])
    p = fit_pca(X, 1)
    np.testing.assert_allclose(p.components_, [[1.0, 0.0]], atol=1e-12)
    # population covariance diag(2.5, 0)
    assert p.singular_values_[0] ** 2 / 4 == pytest.approx(2.5)
    assert p.explained_variance_[0] == pytest.approx(10 / 3)


def test_full_rank_projection_is_a_rotation(rng):
    X = rng.normal(size=(12, 5))
    p = fit_pca(X, 5)
    Y = project(p, X)
    np.testing.assert_allclose(p.inverse_transform(Y), X, atol=1e-8)
    assert abs(np.linalg.norm(Y) - np.linalg.norm(X - X.mean(0))) < 1e-10


def test_projecting_the_mean_gives_zero(rng):
    X = rng.normal(size=(20, 6))
    p = fit_pca(X, 3)
    assert np.abs(project(p, X.mean(axis=0))).max() < 1e-12


def test_projected_variances_match_the_covariance_oracle(rng):
    X = rng.normal(size=(10, 6)) @ rng.normal(size=(6, 6))
    p = fit_pca(X, 6)
    var = project(p, X).var(axis=0, ddof=1)
    S = p.singular_values_
    np.testing.assert_allclose(var, S**2 / 9, rtol=1e-10)
    assert (np.diff(var) <= 1e-12).all()
    w, _ = oracles.covariance_eigvecs(X, 6)
    np.testing.assert_allclose(var, w, rtol=1e-8)


@given(seed=st.integers(0, 2**31), k=st.integers(1, 6))
@settings(max_examples=60, deadline=None)
def test_span_matches_covariance_eigenvectors(seed, k):
    X = np.random.default_rng(seed).normal(size=(10, 6))
    p = fit_pca(X, k)
    _, V = oracles.covariance_eigvecs(X, k)
    assert np.abs(p.components_ @ p.components_.T - np.eye(k)).max() < 1e-8
    assert subspace_angles(p.components_.T, V).max() < 1e-6


def test_sign_rule_makes_largest_entry_positive(rng):
    p = fit_pca(rng.normal(size=(30, 8)), 4)
    idx = np.abs(p.components_).argmax(axis=1)
    assert (p.components_[np.arange(4), idx] > 0).all()


def test_reconstruction_error_never_grows_with_k(rng):
    X = rng.normal(size=(25, 9)) @ rng.normal(size=(9, 9))
    errs = [np.linalg.norm(X - fit_pca(X, k).inverse_transform(project(fit_pca(X, k), X))) for k in range(1, 10)]
    assert all(b <= a + 1e-9 for a, b in zip(errs, errs[1:]))
    assert errs[-1] < 1e-8


@pytest.mark.parametrize("shape", [(300, 1200), (1200, 300)])
def test_gram_route_agrees_with_direct_svd(rng, shape):
    X = rng.normal(size=shape) * np.linspace(3.0, 0.1, shape[1])
    p = PCA(n_components=20).fit(X)
    _, S, Vt = np.linalg.svd(X - X.mean(0), full_matrices=False)
    assert len(p.singular_values_) == min(shape)
    np.testing.assert_allclose(p.singular_values_, S, rtol=1e-8, atol=1e-8 * S[0])
    assert subspace_angles(p.components_.T, Vt[:20].T).max() < 1e-6


def test_rank_deficient_wide_data_falls_back_to_svd(rng):
    X = rng.normal(size=(400, 3)) @ rng.normal(size=(3, 800))
    p = PCA(n_components=10).fit(X)
    assert np.abs(p.components_ @ p.components_.T - np.eye(10)).max() < 1e-8


def test_pca_errors(rng):
    X = rng.normal(size=(5, 3))
    for k in (0, 4):
        with pytest.raises(ValueError):
            fit_pca(X, k)
    X[0, 0] = np.nan
    with pytest.raises(ValueError):
        fit_pca(X, 2)
    p = fit_pca(rng.normal(size=(5, 3)), 2)
    with pytest.raises(ValueError):
        project(p, np.ones((1, 4)))


def test_whitened_training_projection_has_unit_variance(rng):
    X = rng.normal(size=(50, 6)) * [5, 4, 3, 2, 1, 0.5]
    Y = PCA(n_components=4, whiten=True).fit(X).transform(X)
    np.testing.assert_allclose(Y.var(axis=0, ddof=1), 1.0, rtol=1e-10)


def test_json_round_trip(rng):
    X = rng.normal(size=(30, 6))
    std = Standardizer().fit(X)
    p = fit_pca(std.transform(X), 3)
    rec = json.loads(json.dumps(pca_to_dict(p, std)))
    assert set(rec) >= {"d", "k", "mean", "scale", "components", "singular_values"}
    p2, std2 = pca_from_dict(rec)
    Z = rng.normal(size=(4, 6))
    assert np.array_equal(p2.transform(std2.transform(Z)), p.transform(std.transform(Z)))
