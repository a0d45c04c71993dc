"""Seeded dataset construction and the end-to-end forecasting estimator."""
from __future__ import annotations

import warnings

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .config import METHODS, RunConfig, derive_seed
from .dimred import PCA, Standardizer
from .fusion import ConfidenceReport, Decision, VotingFusion, confidence_index, decide, fuse_votes
from .grid import generate_loads, load_case, observe_days, place_sensors, simulate_days
from .learners import DEFAULT_CONFIGS, make_classifier
from .windowing import Dataset, assemble, split_folds


def penetration_key(penetration: float) -> int:
    """Integer key for seed derivation, so 0.1 and 0.1000000001 do not diverge."""
    return int(round(penetration * 10_000))


def simulate_system(config: RunConfig, penetration: float | None = None, placement: int = 0, loads=None,
                    base=None):
    """Loads, sensor placement and per-day traces for one configuration.

    Returns ``(topology, placement, traces)``. ``loads`` may be passed in to
    share one demand scenario across several placements. ``base`` is a list
    of traces already simulated on the same loads; it is re-measured instead
    of rerunning the network, which gives the same result.
    """
    sim = config.sim
    pen = sim.penetration if penetration is None else penetration
    topo = load_case(sim.case)
    if loads is None:
        loads = make_loads(config, topo)
    key = penetration_key(pen)
    sensors = place_sensors(topo, pen, derive_seed(config.seed, "placement", key, placement))
    noise_seed = derive_seed(config.seed, "noise", key, placement)
    if base is not None:
        return topo, sensors, observe_days(base, topo, sensors, noise_seed, noise_std=tuple(sim.noise))
    traces = simulate_days(topo, loads, sensors, noise_seed, trip_slots=sim.trip_slots, noise_std=tuple(sim.noise))
    return topo, sensors, traces


def simulate_base(config: RunConfig, loads=None):
    """Noise-free traces of the configured network with every bus observed, for :func:`observe_days`."""
    topo = load_case(config.sim.case)
    loads = make_loads(config, topo) if loads is None else loads
    sensors = place_sensors(topo, 1.0, 0)
    return simulate_days(topo, loads, sensors, 0, trip_slots=config.sim.trip_slots, noise_std=0.0)


def make_loads(config: RunConfig, topology=None):
    sim = config.sim
    topo = load_case(sim.case) if topology is None else topology
    return generate_loads(topo, sim.days, derive_seed(config.seed, "loads"), slot_seconds=sim.slot_seconds,
                          stress_fraction=sim.stress_fraction, noise=sim.load_noise)


def build_dataset(config: RunConfig, penetration: float | None = None, placement: int = 0, loads=None,
                  traces=None, base=None) -> Dataset:
    """Simulate, window, label and fold-split one configuration."""
    if traces is None:
        _, _, traces = simulate_system(config, penetration, placement, loads, base)
    w = config.window
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ds = assemble(traces, w.length, w.stride, w.horizon, source_seed=config.seed)
    meta = dict(ds.metadata, case=config.sim.case,
                penetration=config.sim.penetration if penetration is None else penetration,
                placement=placement,
                data_fingerprint=config.data_fingerprint(penetration, placement))
    ds = Dataset(ds.features, ds.labels, meta, ds.starts, ds.trace_ids)
    if len(ds) >= config.eval.folds:
        ds = split_folds(ds, config.eval.folds, derive_seed(config.seed, "folds"))
    return ds


class ForecastPipeline(ClassifierMixin, BaseEstimator):
    """Standardize, project onto principal components, then fuse classifier votes.

    ``k_pca`` is clamped to ``min(n_samples, n_features)`` of the training
    data; the clamp is noted in ``warnings_``. ``classifiers`` maps method
    names to option dicts layered over the library defaults.
    """

    def __init__(self, k_pca=50, standardize=True, whiten=False, methods=METHODS, classifiers=None,
                 weights="uniform", threshold=0.5, seed=0):
        self.k_pca = k_pca
        self.standardize = standardize
        self.whiten = whiten
        self.methods = methods
        self.classifiers = classifiers
        self.weights = weights
        self.threshold = threshold
        self.seed = seed

    @classmethod
    def from_config(cls, config: RunConfig) -> "ForecastPipeline":
        p = config.pipeline
        return cls(k_pca=p.k_pca, standardize=p.standardize, whiten=p.whiten, methods=tuple(p.methods),
                   classifiers={m: p.classifier_config(m) for m in p.methods}, weights=p.weights,
                   threshold=p.threshold, seed=derive_seed(config.seed, "pipeline"))

    def _member(self, kind):
        opts = dict(DEFAULT_CONFIGS[kind])
        opts.update((self.classifiers or {}).get(kind, {}))
        if kind == "svm":
            opts.setdefault("seed", derive_seed(self.seed, "svm"))
        return make_classifier(kind, **opts)

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=np.float64)
        n, d = X.shape
        self.warnings_ = []
        self.n_features_in_ = d
        self.standardizer_ = Standardizer().fit(X) if self.standardize else _identity_standardizer(d)
        Z = self.standardizer_.transform(X)
        k = min(int(self.k_pca), n, d)
        if k < self.k_pca:
            self.warnings_.append(f"k_pca clamped from {self.k_pca} to {k} (n={n}, d={d})")
        self.pca_ = PCA(n_components=k, whiten=self.whiten).fit(Z)
        R = self.pca_.transform(Z)
        self.fusion_ = VotingFusion([(m, self._member(m)) for m in self.methods], weights=self.weights,
                                    threshold=self.threshold, seed=derive_seed(self.seed, "fusion")).fit(R, y)
        self.classes_ = self.fusion_.classes_
        return self

    def transform(self, X):
        check_is_fitted(self, "pca_")
        X = check_array(np.atleast_2d(X), dtype=np.float64)
        return self.pca_.transform(self.standardizer_.transform(X))

    def member_predictions(self, X) -> dict[str, np.ndarray]:
        return self.fusion_.member_predictions(self.transform(X))

    def predict(self, X):
        return self.fusion_.predict(self.transform(X))

    def predict_proba(self, X):
        return self.fusion_.predict_proba(self.transform(X))

    def confidence(self, X) -> ConfidenceReport:
        return self.fusion_.confidence(self.transform(X))

    def decide(self, X) -> Decision:
        return self.fusion_.decide(self.transform(X))

    @property
    def param_counts_(self) -> dict[str, int]:
        counts = {m: int(est.param_count_) for m, est in self.fusion_.named_estimators_.items()}
        counts["fused"] = int(sum(counts.values()))
        return counts


def _identity_standardizer(d: int) -> Standardizer:
    s = Standardizer()
    s.n_features_in_ = d
    s.mean_ = np.zeros(d)
    s.scale_ = np.ones(d)
    return s


def fused_outputs(fusion: VotingFusion, R: np.ndarray):
    """Member predictions, fused class, vote distribution and confidence for reduced features."""
    members = fusion.member_predictions(R)
    labels = np.column_stack([members[m] for m in fusion.named_estimators_])
    idx, dist = fuse_votes(np.searchsorted(fusion.classes_, labels), fusion.weights_, len(fusion.classes_))
    fused = fusion.classes_[idx]
    report = confidence_index(dist, len(fusion.named_estimators_))
    return members, labels, fused, dist, report


__all__ = [
    "ForecastPipeline",
    "build_dataset",
    "decide",
    "fused_outputs",
    "make_loads",
    "penetration_key",
    "simulate_base",
    "simulate_system",
]
