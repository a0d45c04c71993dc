"""Moving-window segmentation of traces into a labeled forecasting dataset."""
from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .grid.simulate import CHANNELS, EventRecord, SimulationTrace

DEFAULT_WINDOW = 166
DEFAULT_STRIDE = 10
DEFAULT_HORIZON = 30


class ShortTraceWarning(UserWarning):
    """A trace is too short to hold a single window plus its label horizon."""


@dataclass(frozen=True)
class MeasurementWindow:
    data: np.ndarray  # (A slots, B features)
    start_slot: int
    feature_order: tuple[tuple[int, str], ...]

    @property
    def end_slot(self) -> int:
        return self.start_slot + self.data.shape[0] - 1

    def flatten(self) -> np.ndarray:
        return np.ascontiguousarray(self.data).ravel()

    @classmethod
    def unflatten(cls, vector, n_slots: int, feature_order, start_slot: int = 0) -> "MeasurementWindow":
        data = np.asarray(vector, dtype=float).reshape(n_slots, len(feature_order))
        return cls(data, start_slot, tuple(tuple(f) for f in feature_order))


@dataclass(frozen=True)
class LabelVector:
    """Contingency vector: bit 0 is the normal state, bit c a trip of candidate c."""

    bits: tuple[int, ...]

    def __post_init__(self):
        if not any(self.bits):
            raise ValueError("label vector needs at least one bit set")
        if self.bits[0] and any(self.bits[1:]):
            raise ValueError("normal bit excludes trip bits")

    @classmethod
    def normal(cls, n_candidates: int) -> "LabelVector":
        return cls((1,) + (0,) * n_candidates)

    @property
    def is_normal(self) -> bool:
        return bool(self.bits[0])


def segment(trace: SimulationTrace, window: int = DEFAULT_WINDOW, stride: int = DEFAULT_STRIDE,
            horizon: int = DEFAULT_HORIZON) -> list[MeasurementWindow]:
    """Cut pre-event windows from a trace.

    Windows start at 0, stride, 2*stride, ...; one is kept only when its whole
    label horizon lies inside the trace and it does not contain a trip slot.
    """
    if window < 1 or stride < 1 or horizon < 0:
        raise ValueError("need window >= 1, stride >= 1, horizon >= 0")
    T = trace.n_slots
    if T < window + horizon:
        warnings.warn(f"trace of {T} slots is shorter than window + horizon = {window + horizon}",
                      ShortTraceWarning, stacklevel=2)
        return []
    flat = trace.measurements.reshape(T, -1)
    order = tuple(trace.feature_order)
    trips = np.array(sorted({ev.trip_time for ev in trace.events}), dtype=int)
    out = []
    for start in range(0, T - window - horizon + 1, stride):
        end = start + window - 1
        if trips.size and ((trips >= start) & (trips <= end)).any():
            continue
        out.append(MeasurementWindow(flat[start:end + 1], start, order))
    return out


def label_window(window: MeasurementWindow, events, horizon: int, candidate_lines) -> LabelVector:
    """Mark every candidate line tripping in ``(window_end, window_end + horizon]``."""
    end = window.end_slot
    bits = [0] * (len(candidate_lines) + 1)
    pos = {line: i + 1 for i, line in enumerate(candidate_lines)}
    for ev in events:
        if end < ev.trip_time <= end + horizon and ev.line in pos:
            bits[pos[ev.line]] = 1
    if not any(bits):
        bits[0] = 1
    return LabelVector(tuple(bits))


def pattern_classes(labels: np.ndarray) -> tuple[np.ndarray, list[tuple[int, ...]]]:
    """Map label-vector rows to class ids.

    Single-hot pattern with bit c set is class c (so normal is class 0); each
    distinct multi-hot pattern gets an extra id after the C + 1 single-hot ones.
    Returns the class ids and the pattern table indexed by class id.
    """
    labels = np.asarray(labels, dtype=int)
    width = labels.shape[1]
    table = [tuple(int(i == c) for i in range(width)) for c in range(width)]
    multi = sorted({tuple(r) for r in labels.tolist() if sum(r) > 1}, reverse=True)
    table += multi
    index = {p: i for i, p in enumerate(table)}
    ids = np.array([index[tuple(r)] for r in labels.tolist()], dtype=int)
    return ids, table


@dataclass(frozen=True)
class Dataset:
    features: np.ndarray  # (n, A * B), slot-major
    labels: np.ndarray  # (n, C + 1) of {0, 1}
    metadata: dict
    starts: np.ndarray = field(default=None)
    trace_ids: np.ndarray = field(default=None)
    folds: np.ndarray | None = None

    def __post_init__(self):
        if self.features.ndim != 2 or self.labels.ndim != 2 or len(self.features) != len(self.labels):
            raise ValueError("features and labels must be 2-D with equal row counts")
        if self.folds is not None:
            k = int(self.metadata.get("n_folds", self.folds.max() + 1))
            if len(self.folds) != len(self.features) or set(np.unique(self.folds)) != set(range(k)):
                raise ValueError("fold ids must cover 0..k-1 with every fold nonempty")

    def __len__(self) -> int:
        return len(self.features)

    @property
    def classes(self) -> np.ndarray:
        return pattern_classes(self.labels)[0]

    @property
    def patterns(self) -> list[tuple[int, ...]]:
        return pattern_classes(self.labels)[1]

    def class_counts(self) -> dict[int, int]:
        ids, counts = np.unique(self.classes, return_counts=True)
        return {int(i): int(c) for i, c in zip(ids, counts)}

    def window(self, i: int) -> MeasurementWindow:
        start = 0 if self.starts is None else int(self.starts[i])
        return MeasurementWindow.unflatten(self.features[i], self.metadata["A"], self.metadata["feature_order"], start)

    # --- CSV + JSON sidecar ------------------------------------------------------
    def sidecar(self) -> dict:
        meta = dict(self.metadata)
        meta["feature_order"] = [list(f) for f in meta["feature_order"]]
        meta["folds"] = None if self.folds is None else self.folds.tolist()
        meta["n_samples"] = len(self)
        return meta

    def to_csv(self) -> str:
        d, c = self.features.shape[1], self.labels.shape[1]
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow([f"x{i}" for i in range(d)] + [f"y{i}" for i in range(c)])
        for x, y in zip(self.features, self.labels):
            w.writerow([repr(float(v)) for v in x] + [int(v) for v in y])
        return buf.getvalue()

    def save(self, csv_path: str | Path, json_path: str | Path | None = None):
        csv_path = Path(csv_path)
        json_path = Path(json_path) if json_path else csv_path.with_suffix(".json")
        csv_path.write_text(self.to_csv())
        json_path.write_text(json.dumps(self.sidecar(), indent=2, sort_keys=True))

    @classmethod
    def load(cls, csv_path: str | Path, json_path: str | Path | None = None) -> "Dataset":
        csv_path = Path(csv_path)
        json_path = Path(json_path) if json_path else csv_path.with_suffix(".json")
        meta = json.loads(json_path.read_text())
        features, labels = read_feature_csv(csv_path, meta["A"] * meta["B"], meta["C"] + 1)
        folds = meta.pop("folds", None)
        meta.pop("n_samples", None)
        meta["feature_order"] = [tuple(f) for f in meta["feature_order"]]
        return cls(features, labels, meta, folds=None if folds is None else np.asarray(folds, dtype=int))


def read_feature_csv(path: str | Path, n_features: int, n_labels: int | None = None):
    """Read a dataset-style CSV; label columns are optional when ``n_labels`` is None."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise ValueError(f"{path}: empty CSV")
        xcols = [i for i, h in enumerate(header) if h.startswith("x")]
        ycols = [i for i, h in enumerate(header) if h.startswith("y")]
        if len(xcols) != n_features:
            raise ValueError(f"{path}: expected {n_features} feature columns, found {len(xcols)}")
        if n_labels is not None and len(ycols) != n_labels:
            raise ValueError(f"{path}: expected {n_labels} label columns, found {len(ycols)}")
        rows = [r for r in reader if r]
    arr = np.array(rows, dtype=float) if rows else np.zeros((0, len(header)))
    X = arr[:, xcols]
    Y = arr[:, ycols].astype(np.int8) if ycols else None
    if not np.isfinite(X).all():
        raise ValueError(f"{path}: non-finite feature values")
    return X, Y


def assemble(traces: list[SimulationTrace], window: int = DEFAULT_WINDOW, stride: int = DEFAULT_STRIDE,
             horizon: int = DEFAULT_HORIZON, source_seed: int | None = None) -> Dataset:
    """Segment and label every trace and stack the flattened windows."""
    if not traces:
        raise ValueError("no traces to assemble")
    order = tuple(traces[0].feature_order)
    cands = tuple(traces[0].candidate_lines)
    for tr in traces[1:]:
        if tuple(tr.feature_order) != order or tuple(tr.candidate_lines) != cands:
            raise ValueError("traces disagree on feature order or candidate lines")
    X, Y, starts, tids, notes = [], [], [], [], []
    for ti, tr in enumerate(traces):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", ShortTraceWarning)
            wins = segment(tr, window, stride, horizon)
        notes += [f"trace {ti}: {w.message}" for w in caught if issubclass(w.category, ShortTraceWarning)]
        for w in wins:
            X.append(w.flatten())
            Y.append(label_window(w, tr.events, horizon, cands).bits)
            starts.append(w.start_slot)
            tids.append(ti)
    B = len(order)
    meta = {
        "A": window,
        "B": B,
        "C": len(cands),
        "horizon": horizon,
        "stride": stride,
        "source_seed": source_seed,
        "feature_order": [tuple(f) for f in order],
        "candidate_lines": list(cands),
        "warnings": notes,
    }
    if not X:
        warnings.warn("assembled dataset is empty", ShortTraceWarning, stacklevel=2)
        return Dataset(np.zeros((0, window * B)), np.zeros((0, len(cands) + 1), dtype=np.int8), meta,
                       np.zeros(0, dtype=int), np.zeros(0, dtype=int))
    return Dataset(np.vstack(X), np.asarray(Y, dtype=np.int8), meta, np.asarray(starts), np.asarray(tids))


def split_folds(dataset: Dataset, k: int = 3, seed: int = 0) -> Dataset:
    """Assign stratified fold ids.

    Samples are shuffled, grouped by label pattern, and dealt one at a time to
    the smallest fold, preferring the fold holding the fewest of that pattern.
    Fold sizes therefore differ by at most one.
    """
    n = len(dataset)
    if k < 2:
        raise ValueError("need at least 2 folds")
    if n < k:
        raise ValueError(f"{n} samples cannot fill {k} folds")
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    ids = dataset.classes[perm]
    order = perm[np.argsort(ids, kind="stable")]
    folds = np.empty(n, dtype=int)
    sizes = np.zeros(k, dtype=int)
    cls = dataset.classes
    for c in np.unique(cls):
        per = np.zeros(k, dtype=int)
        for i in order[cls[order] == c]:
            f = min(range(k), key=lambda j: (sizes[j], per[j], j))
            folds[i] = f
            sizes[f] += 1
            per[f] += 1
    meta = dict(dataset.metadata, n_folds=k, fold_seed=seed)
    return replace(dataset, folds=folds, metadata=meta)


__all__ = [
    "CHANNELS",
    "Dataset",
    "EventRecord",
    "LabelVector",
    "MeasurementWindow",
    "ShortTraceWarning",
    "assemble",
    "label_window",
    "pattern_classes",
    "read_feature_csv",
    "segment",
    "split_folds",
]
