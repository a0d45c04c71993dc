"""Zero-one error, cross-validation, the sensor-penetration sweep and result tables."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from sklearn.base import clone

from .config import RunConfig, fingerprint
from .fusion import roc_curve
from .grid.loads import round_half_up
from .pipeline import ForecastPipeline, build_dataset, fused_outputs, make_loads, simulate_base
from .windowing import Dataset


def mze(predicted, truth) -> float:
    """Fraction of samples whose predicted class differs from the true one."""
    predicted, truth = np.asarray(predicted), np.asarray(truth)
    if predicted.shape != truth.shape or predicted.ndim != 1:
        raise ValueError(f"length mismatch: {predicted.shape} vs {truth.shape}")
    if predicted.size == 0:
        raise ValueError("mze of an empty sample")
    return float(np.count_nonzero(predicted != truth) / predicted.size)


@dataclass
class EvalReport:
    system: str
    methods: list[str]  # members in fusion order, then "fused"
    fold_mze: dict[str, list[float]]
    mze: dict[str, float]
    param_count: dict[str, int]
    E: float
    E_folds: list[float]
    auc: float | None
    fingerprint: str
    settings: dict
    n_samples: int
    class_counts: dict[str, int]
    warnings: list[str] = field(default_factory=list)

    @property
    def fused_mze(self) -> float:
        return self.mze["fused"]

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d: dict) -> "EvalReport":
        return cls(**d)


def _report_fingerprint(dataset: Dataset, estimator: ForecastPipeline, k: int) -> str:
    meta = {key: dataset.metadata.get(key) for key in ("data_fingerprint", "A", "B", "C", "horizon", "stride",
                                                        "source_seed", "fold_seed")}
    return fingerprint({"data": meta, "n": len(dataset), "pipeline": _jsonable(estimator.get_params()), "k": k})


def _jsonable(obj):
    return json.loads(json.dumps(obj, sort_keys=True, default=list))


def cross_validate(dataset: Dataset, pipeline: ForecastPipeline, k: int | None = None, *, system: str = "",
                   settings: dict | None = None, fingerprint_: str | None = None, return_models: bool = False):
    """k-fold evaluation of a pipeline on a fold-assigned dataset.

    Every fold refits standardization, PCA and all members on the training
    folds only. Returns an ``EvalReport`` (and the fitted per-fold pipelines
    when ``return_models`` is set).
    """
    if dataset.folds is None:
        raise ValueError("dataset has no fold assignment; call split_folds first")
    k = int(dataset.metadata.get("n_folds", dataset.folds.max() + 1)) if k is None else int(k)
    if set(np.unique(dataset.folds)) != set(range(k)):
        raise ValueError(f"dataset folds do not match k={k}")
    y = dataset.classes
    X = dataset.features
    methods = list(pipeline.methods)
    fold_mze = {m: [] for m in methods + ["fused"]}
    params = {m: [] for m in methods + ["fused"]}
    E_folds, notes, models = [], [], []
    scores, truth, conf_all = [], [], []
    for f in range(k):
        test = dataset.folds == f
        train = ~test
        missing = sorted(set(y[test].tolist()) - set(y[train].tolist()))
        if missing:
            notes.append(f"fold {f}: test classes {missing} absent from training folds")
        model = clone(pipeline).fit(X[train], y[train])
        notes += [f"fold {f}: {w}" for w in model.warnings_]
        for m, est in model.fusion_.named_estimators_.items():
            dropped = getattr(est, "dropped_classes_", None)
            if dropped is not None and len(dropped):
                notes.append(f"fold {f}: {m} dropped classes {dropped.tolist()} with fewer than 2 samples")
        members, _, fused, dist, report = fused_outputs(model.fusion_, model.transform(X[test]))
        for m in methods:
            fold_mze[m].append(mze(members[m], y[test]))
        fold_mze["fused"].append(mze(fused, y[test]))
        for m, c in model.param_counts_.items():
            params[m].append(c)
        E_folds.append(report.index)
        conf_all.append(report.confidence)
        normal = np.flatnonzero(model.classes_ == 0)
        p_normal = dist.p[:, normal[0]] if normal.size else np.zeros(len(fused))
        scores.append(1.0 - p_normal)
        truth.append(y[test] != 0)
        if return_models:
            models.append(model)
    scores, truth = np.concatenate(scores), np.concatenate(truth)
    auc = None
    if truth.any() and not truth.all():
        auc = roc_curve(scores, truth)[2]
    else:
        notes.append("AUC undefined: held-out samples are all one class")
    result = EvalReport(
        system=system,
        methods=methods + ["fused"],
        fold_mze=fold_mze,
        mze={m: float(sum(v) / len(v)) for m, v in fold_mze.items()},
        param_count={m: round_half_up(sum(v) / len(v)) for m, v in params.items()},
        E=float(np.concatenate(conf_all).mean()),
        E_folds=E_folds,
        auc=auc,
        fingerprint=fingerprint_ or _report_fingerprint(dataset, pipeline, k),
        settings=dict(settings or {}),
        n_samples=len(dataset),
        class_counts={str(c): n for c, n in dataset.class_counts().items()},
        warnings=notes,
    )
    return (result, models) if return_models else result


def evaluate_config(config: RunConfig, dataset: Dataset | None = None, penetration: float | None = None,
                    placement: int = 0):
    """Cross-validate the configured pipeline on the configured (or given) dataset."""
    pen = config.sim.penetration if penetration is None else penetration
    if dataset is None:
        dataset = build_dataset(config, pen, placement)
    settings = {"case": config.sim.case, "seed": config.seed, "A": config.window.length,
                "k_pca": config.pipeline.k_pca, "penetration": pen, "horizon": config.window.horizon}
    label = f"{config.sim.case} @{pen:.0%}"
    return cross_validate(dataset, ForecastPipeline.from_config(config), config.eval.folds, system=label,
                          settings=settings, fingerprint_=config.fingerprint)


def run_benchmark(config: RunConfig, cases=("toy5", "ieee30")) -> list[EvalReport]:
    """The fixed-seed benchmark: one cross-validated report per bundled case."""
    return [evaluate_config(config.with_overrides({"sim.case": c})) for c in cases]


# --- penetration sweep ---------------------------------------------------------------


@dataclass
class SweepPoint:
    penetration: float
    mze: float  # mean fused MZE over the evaluated placements
    n_placements: int
    placement_mze: list[float]
    method_mze: dict[str, float]
    skipped: list[str] = field(default_factory=list)


@dataclass
class SweepResult:
    case: str
    points: list[SweepPoint]
    fingerprint: str

    def __post_init__(self):
        pens = [p.penetration for p in self.points]
        if pens != sorted(set(pens)):
            raise ValueError("sweep penetrations must be strictly increasing")

    def to_csv(self) -> str:
        lines = ["penetration,mze,n_placements"]
        lines += [f"{p.penetration!r},{p.mze!r},{p.n_placements}" for p in self.points]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _skip_reason(ds: Dataset, folds: int) -> str | None:
    if len(ds) == 0:
        return "empty dataset"
    if len(ds.class_counts()) < 2:
        return f"single-class dataset ({len(ds)} windows, all class {next(iter(ds.class_counts()))})"
    if len(ds) < folds:
        return f"{len(ds)} windows cannot fill {folds} folds"
    return None


def penetration_sweep(config: RunConfig, penetrations=None, placements: int | None = None,
                      progress=None) -> SweepResult:
    """Fused MZE against sensor penetration, averaged over random placements.

    All placements share one demand scenario, so the network is simulated
    once and re-measured per placement. Each placement draws its own sensor
    set and measurement noise from seeds derived from the master seed.
    """
    pens = list(config.eval.penetrations if penetrations is None else penetrations)
    n_place = config.eval.placements if placements is None else int(placements)
    if not pens or any(not 0.0 < p <= 1.0 for p in pens):
        raise ValueError("penetrations must be nonempty and each in (0, 1]")
    if n_place < 1:
        raise ValueError("need at least one placement per point")
    base = simulate_base(config, make_loads(config))
    points = []
    for pen in pens:
        vals, skipped, per_method = [], [], {}
        for i in range(n_place):
            ds = build_dataset(config, pen, i, base=base)
            reason = _skip_reason(ds, config.eval.folds)
            if reason:
                skipped.append(f"placement {i}: {reason}")
                continue
            rep = evaluate_config(config, ds, pen, i)
            vals.append(rep.fused_mze)
            for m, v in rep.mze.items():
                per_method.setdefault(m, []).append(v)
            if progress:
                progress(pen, i, rep)
        mean = float(sum(vals) / len(vals)) if vals else math.nan
        points.append(SweepPoint(float(pen), mean, len(vals), vals,
                                 {m: float(sum(v) / len(v)) for m, v in per_method.items()}, skipped))
    fp = fingerprint({"config": config.fingerprint_payload(), "penetrations": pens, "placements": n_place})
    return SweepResult(config.sim.case, points, fp)


# --- tables -----------------------------------------------------------------------------


@dataclass
class ReportTable:
    text: str
    csv: str
    json: str


def format_cell(mze_value: float, params: int) -> str:
    return f"{mze_value:.3f}/{params}"


def report(items) -> ReportTable:
    """Render reports as a methods-by-system table of ``MZE/params`` cells.

    A sweep renders as a penetration/MZE table instead. Mixed input is
    rendered section by section.
    """
    items = list(items)
    if not items:
        raise ValueError("nothing to report")
    evals = [r for r in items if isinstance(r, EvalReport)]
    sweeps = [r for r in items if isinstance(r, SweepResult)]
    if len(evals) + len(sweeps) != len(items):
        raise TypeError("report accepts EvalReport and SweepResult objects")
    texts, csvs, payload = [], [], {}
    if evals:
        methods = []
        for r in evals:
            methods += [m for m in r.methods if m not in methods]
        rows = [["system"] + methods]
        for r in evals:
            rows.append([r.system] + [format_cell(r.mze[m], r.param_count[m]) if m in r.mze else "-"
                                      for m in methods])
        texts.append(_align(rows))
        csvs.append(_csv(rows))
        payload["evaluations"] = [r.to_dict() for r in evals]
    for s in sweeps:
        rows = [["penetration", "mze"]] + [[f"{p.penetration:g}", f"{p.mze:.4f}"] for p in s.points]
        texts.append(f"sweep {s.case}\n" + _align(rows))
        csvs.append(_csv([["penetration", "mze"]] + [[repr(p.penetration), repr(p.mze)] for p in s.points]))
        payload.setdefault("sweeps", []).append(s.to_dict())
    return ReportTable("\n".join(texts), "\n".join(csvs), json.dumps(payload, indent=2, sort_keys=True) + "\n")


def _align(rows) -> str:
    widths = [max(len(str(r[i])) for r in rows) for i in range(len(rows[0]))]
    return "\n".join("  ".join(str(c).ljust(w) for c, w in zip(r, widths)).rstrip() for r in rows) + "\n"


def _csv(rows) -> str:
    buf = io.StringIO()
    csv.writer(buf, lineterminator="\n").writerows(rows)
    return buf.getvalue()
