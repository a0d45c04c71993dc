import csv
import io
import json
import math

import numpy as np
import pytest
from sklearn.base import clone

import oracles
from gridcast.evaluation import (
    EvalReport,
    SweepPoint,
    SweepResult,
    _skip_reason,
    cross_validate,
    evaluate_config,
    format_cell,
    mze,
    penetration_sweep,
    report,
)
from gridcast.pipeline import ForecastPipeline
from gridcast.windowing import Dataset, split_folds

FAST = {"logistic": {"n_iter": 200}, "svm": {"epochs": 5}}


def synthetic(classes, X, folds=3, seed=0):
    classes = np.asarray(classes)
    labels = np.zeros((len(classes), classes.max() + 1), dtype=np.int8)
    labels[np.arange(len(classes)), classes] = 1
    meta = {"A": 1, "feature_order": [(i, "vm") for i in range(X.shape[1])], "horizon": 0}
    return split_folds(Dataset(np.asarray(X, float), labels, meta), folds, seed)


def pipe(k=4, **kw):
    return ForecastPipeline(k_pca=k, classifiers=FAST, **kw)


# --- mze -----------------------------------------------------------------------------


def test_mze_examples():
    assert mze([0, 1, 2, 2], [0, 1, 1, 2]) == 0.25
    assert mze([3], [3]) == 0.0 and mze([1, 1], [0, 0]) == 1.0


def test_mze_errors():
    with pytest.raises(ValueError):
        mze([], [])
    with pytest.raises(ValueError):
        mze([0, 1], [0])


def test_mze_matches_the_oracle_on_random_pairs():
    rng = np.random.default_rng(11)
    for _ in range(1000):
        n = int(rng.integers(1, 40))
        p, t = rng.integers(0, 4, n), rng.integers(0, 4, n)
        assert mze(p, t) == oracles.zero_one_error(p.tolist(), t.tolist())


# --- cross-validation ----------------------------------------------------------------


@pytest.fixture(scope="module")
def threshold_data():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(150, 8))
    y = np.digitize(X[:, 0], [-0.5, 0.5])  # three classes decided by one feature
    return synthetic(y, X)


def test_a_one_feature_rule_is_learned_by_every_method():
    rng = np.random.default_rng(2)
    X = rng.normal(size=(150, 8))
    y = np.arange(150) % 2
    X[:, 0] = 4.0 * y - 2.0 + rng.normal(scale=0.3, size=150)
    # unscaled, so the informative column is the leading component
    rep = cross_validate(synthetic(y, X), ForecastPipeline(k_pca=2, standardize=False))
    for m, v in rep.mze.items():
        assert v <= 0.05, (m, v)


def test_shuffled_labels_sit_at_chance():
    rng = np.random.default_rng(5)
    Q = 4
    y = rng.permutation(np.arange(240) % Q)
    rep = cross_validate(synthetic(y, rng.normal(size=(240, 10))), pipe(k=5))
    for m, v in rep.mze.items():
        assert abs(v - (1 - 1 / Q)) <= 0.1, (m, v)


def test_fold_mean_is_the_plain_mean(threshold_data):
    rep = cross_validate(threshold_data, pipe())
    for m, vals in rep.fold_mze.items():
        assert rep.mze[m] == sum(vals) / len(vals)
    assert len(rep.E_folds) == 3 and 0.0 <= rep.E <= 1.0


def test_fold_results_equal_a_manual_refit(threshold_data):
    rep, models = cross_validate(threshold_data, pipe(), return_models=True)
    y = threshold_data.classes
    for f, model in enumerate(models):
        test = threshold_data.folds == f
        manual = clone(pipe()).fit(threshold_data.features[~test], y[~test])
        assert np.array_equal(manual.predict(threshold_data.features[test]), model.predict(threshold_data.features[test]))
        assert rep.fold_mze["fused"][f] == mze(model.predict(threshold_data.features[test]), y[test])


def test_cross_validation_is_deterministic(threshold_data):
    a = cross_validate(threshold_data, pipe()).to_json()
    b = cross_validate(threshold_data, pipe()).to_json()
    assert a == b
    assert EvalReport.from_dict(json.loads(a)).to_json() == a


def test_a_test_only_label_column_does_not_help():
    """Leakage canary: the held-out fold carries its label in an extra column."""
    rng = np.random.default_rng(9)
    X = rng.normal(size=(180, 6))
    y = (X[:, 0] + rng.normal(scale=1.5, size=180) > 0).astype(int) + (X[:, 1] > 1).astype(int)
    base = synthetic(y, X)
    clean = cross_validate(base, pipe(k=6, standardize=False))
    for f in range(3):
        canary = np.where(base.folds == f, 5.0 * y, 0.0)[:, None]
        leaky = Dataset(np.hstack([X, canary]), base.labels, base.metadata, folds=base.folds)
        rep = cross_validate(leaky, pipe(k=7, standardize=False))
        assert rep.fold_mze["fused"][f] >= clean.fold_mze["fused"][f] - 0.02
        assert rep.fold_mze["fused"][f] > 0.1


def test_cross_validate_needs_folds(threshold_data):
    with pytest.raises(ValueError):
        cross_validate(Dataset(threshold_data.features, threshold_data.labels, {}), pipe())
    with pytest.raises(ValueError):
        cross_validate(threshold_data, pipe(), k=4)


def test_auc_is_undefined_without_positive_windows():
    rng = np.random.default_rng(0)
    y = np.arange(30) % 2 + 1  # no class 0
    rep = cross_validate(synthetic(y, rng.normal(size=(30, 4))), pipe(k=3))
    assert rep.auc is None and any("AUC" in w for w in rep.warnings)


# --- tables --------------------------------------------------------------------------


def test_cell_format():
    assert format_cell(0.1049, 151) == "0.105/151"


def _stub(system="s", fused=0.25):
    return EvalReport(system, ["svm", "fused"], {"svm": [0.5], "fused": [fused]}, {"svm": 0.5, "fused": fused},
                      {"svm": 10, "fused": 10}, 0.9, [0.9], 0.8, "f" * 64, {}, 4, {"0": 4})


def test_one_by_one_table():
    tab = report([EvalReport("toy", ["fused"], {"fused": [0.0]}, {"fused": 0.0}, {"fused": 7}, 1.0, [1.0], None,
                             "0", {}, 3, {"0": 3})])
    assert tab.text.splitlines() == ["system  fused", "toy     0.000/7"]
    assert list(csv.reader(io.StringIO(tab.csv))) == [["system", "fused"], ["toy", "0.000/7"]]
    assert json.loads(tab.json)["evaluations"][0]["system"] == "toy"


def test_report_rows_follow_input_order():
    tab = report([_stub("b"), _stub("a", 0.125)])
    rows = list(csv.reader(io.StringIO(tab.csv)))
    assert rows == [["system", "svm", "fused"], ["b", "0.500/10", "0.250/10"], ["a", "0.500/10", "0.125/10"]]
    with pytest.raises(ValueError):
        report([])
    with pytest.raises(TypeError):
        report(["x"])


def test_sweep_csv_and_ordering():
    pts = [SweepPoint(0.05, 0.2, 5, [0.2] * 5, {}), SweepPoint(0.1, 0.1, 4, [0.1] * 4, {}, ["placement 3: x"])]
    res = SweepResult("toy5", pts, "0" * 64)
    assert res.to_csv() == "penetration,mze,n_placements\n0.05,0.2,5\n0.1,0.1,4\n"
    assert "sweep toy5" in report([res]).text
    with pytest.raises(ValueError):
        SweepResult("toy5", pts[::-1], "0")
    with pytest.raises(ValueError):
        SweepResult("toy5", [pts[0], pts[0]], "0")


def test_skip_reasons():
    one = np.zeros((4, 2), dtype=np.int8)
    one[:, 0] = 1
    meta = {"A": 1, "feature_order": [(0, "vm")]}
    assert _skip_reason(Dataset(np.zeros((0, 1)), np.zeros((0, 2)), meta), 3) == "empty dataset"
    assert "single-class" in _skip_reason(Dataset(np.zeros((4, 1)), one, meta), 3)
    two = one.copy()
    two[0] = [0, 1]
    assert "cannot fill" in _skip_reason(Dataset(np.zeros((4, 1)), two, meta), 5)
    assert _skip_reason(Dataset(np.zeros((4, 1)), two, meta), 3) is None


# --- end to end on the small configuration -------------------------------------------


def test_evaluate_config_is_reproducible(small_config):
    a, b = evaluate_config(small_config), evaluate_config(small_config)
    assert a.to_json() == b.to_json()
    assert a.fingerprint == small_config.fingerprint and a.n_samples > 0
    assert a.methods == ["svm", "logistic", "tree", "knn", "gnb", "fused"]


def test_small_sweep(small_config):
    res = penetration_sweep(small_config, [0.2, 0.6], placements=2)
    again = penetration_sweep(small_config, [0.2, 0.6], placements=2)
    assert res.to_json() == again.to_json()
    assert [p.penetration for p in res.points] == [0.2, 0.6]
    for p in res.points:
        assert p.n_placements + len(p.skipped) == 2
        if p.n_placements:
            assert math.isclose(p.mze, sum(p.placement_mze) / p.n_placements)
    with pytest.raises(ValueError):
        penetration_sweep(small_config, [], placements=1)
    with pytest.raises(ValueError):
        penetration_sweep(small_config, [0.2], placements=0)
