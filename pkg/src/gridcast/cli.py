"""Command-line front end: simulate, dataset, train, evaluate, sweep, forecast."""
from __future__ import annotations

import argparse
import hashlib
import json
import sys
import warnings
from pathlib import Path

import numpy as np

from .bundle import BundleError, load_bundle, save_bundle, write_atomic
from .config import ConfigError, RunConfig, fingerprint
from .evaluation import cross_validate, evaluate_config, penetration_sweep, report
from .grid.topology import CaseError
from .pipeline import ForecastPipeline, build_dataset, simulate_system
from .windowing import Dataset, pattern_classes, read_feature_csv

# flag -> dotted RunConfig field
OVERRIDES = {
    "case": ("sim.case", str),
    "days": ("sim.days", int),
    "slot_seconds": ("sim.slot_seconds", float),
    "stress_fraction": ("sim.stress_fraction", float),
    "trip_slots": ("sim.trip_slots", int),
    "penetration": ("sim.penetration", float),
    "window": ("window.length", int),
    "stride": ("window.stride", int),
    "horizon": ("window.horizon", int),
    "k_pca": ("pipeline.k_pca", int),
    "weights": ("pipeline.weights", str),
    "threshold": ("pipeline.threshold", float),
    "folds": ("eval.folds", int),
    "placements": ("eval.placements", int),
}


class CommandError(Exception):
    def __init__(self, kind: str, message: str, field: str | None = None):
        super().__init__(message)
        self.kind = kind
        self.field = field


def _short(fp: str) -> str:
    return fp[:8]


def _file_digest(*paths) -> str:
    h = hashlib.sha256()
    for p in paths:
        h.update(Path(p).read_bytes())
    return h.hexdigest()


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _require(path, what: str) -> Path:
    p = Path(path)
    if not p.exists():
        raise CommandError("missing_file", f"{what} not found: {p}", what)
    return p


def _load_dataset(path) -> tuple[Dataset, dict]:
    csv_path = _require(path, "dataset")
    side = csv_path.with_suffix(".json")
    _require(side, "dataset sidecar")
    try:
        ds = Dataset.load(csv_path, side)
    except (ValueError, KeyError) as exc:
        raise CommandError("schema", f"{csv_path}: {exc}", "dataset") from None
    return ds, json.loads(side.read_text())


# --- commands ---------------------------------------------------------------------------


def cmd_simulate(config: RunConfig) -> dict:
    topo, sensors, traces = simulate_system(config)
    spd = len(traces[0].measurements) if traces else 0
    rows, events = ["slot,bus,vm,va,p,q"], []
    for day, tr in enumerate(traces):
        offset = day * int(round(86400 / config.sim.slot_seconds))
        rows += [_shift_row(r, offset) for r in tr.to_csv().splitlines()[1:]]
        events += [dict(ev.to_dict(), overload_start=ev.overload_start + offset, trip_time=ev.trip_time + offset)
                   for ev in tr.events]
    fp = config.data_fingerprint()
    out = Path(config.out)
    csv_path = write_atomic(out / f"simulate-{_short(fp)}.csv", "\n".join(rows) + "\n")
    ev_path = write_atomic(out / f"simulate-{_short(fp)}.events.json", _dump(events))
    meta = {"fingerprint": fp, "config_fingerprint": config.fingerprint, "config": config.to_dict(),
            "case": topo.name, "sensor_buses": list(sensors.sensor_buses), "days": len(traces),
            "slots_per_day": spd, "candidate_lines": list(topo.candidate_lines), "n_events": len(events)}
    meta_path = write_atomic(out / f"simulate-{_short(fp)}.json", _dump(meta))
    return {"outputs": [str(csv_path), str(ev_path), str(meta_path)], "fingerprint": fp, "n_events": len(events)}


def _shift_row(row: str, offset: int) -> str:
    slot, rest = row.split(",", 1)
    return f"{int(slot) + offset},{rest}"


def cmd_dataset(config: RunConfig) -> dict:
    ds = build_dataset(config)
    fp = ds.metadata["data_fingerprint"]
    out = Path(config.out)
    csv_path = out / f"dataset-{_short(fp)}.csv"
    side = ds.sidecar()
    side.update(fingerprint=fp, config_fingerprint=config.fingerprint, config=config.to_dict(),
                class_counts={str(k): v for k, v in ds.class_counts().items()} if len(ds) else {})
    write_atomic(csv_path, ds.to_csv())
    json_path = write_atomic(csv_path.with_suffix(".json"), _dump(side))
    result = {"outputs": [str(csv_path), str(json_path)], "fingerprint": fp, "n_samples": len(ds)}
    if len(ds) == 0:
        result["warning"] = "empty dataset: no window fits its label horizon inside any trace"
    return result


def cmd_train(config: RunConfig, dataset_path) -> dict:
    ds, side = _load_dataset(dataset_path)
    if len(ds) == 0:
        raise CommandError("empty_dataset", "cannot train on an empty dataset", "dataset")
    y = ds.classes
    if len(np.unique(y)) < 2:
        raise CommandError("schema", "training needs at least 2 label patterns", "dataset")
    fp = fingerprint({"config": config.fingerprint_payload(), "dataset": _file_digest(dataset_path)})
    model = ForecastPipeline.from_config(config).fit(ds.features, y)
    extra = {
        "fingerprint": fp,
        "config_fingerprint": config.fingerprint,
        "data_fingerprint": side.get("data_fingerprint"),
        "feature_order": side["feature_order"],
        "A": side["A"],
        "B": side["B"],
        "C": side["C"],
        "patterns": [list(p) for p in ds.patterns],
        "warnings": model.warnings_,
    }
    path = save_bundle(model, Path(config.out) / f"train-{_short(fp)}", extra)
    return {"outputs": [str(path)], "fingerprint": fp, "param_counts": model.param_counts_}


def cmd_evaluate(config: RunConfig, dataset_path=None) -> dict:
    if dataset_path is None:
        rep = evaluate_config(config)
        fp = config.fingerprint
    else:
        ds, _ = _load_dataset(dataset_path)
        if ds.folds is None:
            raise CommandError("schema", "dataset has no fold assignment", "folds")
        fp = fingerprint({"config": config.fingerprint_payload(), "dataset": _file_digest(dataset_path)})
        rep = cross_validate(ds, ForecastPipeline.from_config(config), system=f"{ds.metadata.get('case', 'dataset')}",
                             settings={"seed": config.seed, "A": ds.metadata["A"], "k_pca": config.pipeline.k_pca,
                                       "penetration": ds.metadata.get("penetration"),
                                       "horizon": ds.metadata["horizon"]},
                             fingerprint_=fp)
    table = report([rep])
    out = Path(config.out)
    base = out / f"evaluate-{_short(fp)}"
    paths = [write_atomic(base.with_suffix(".json"), rep.to_json()),
             write_atomic(base.with_suffix(".txt"), table.text),
             write_atomic(base.with_suffix(".csv"), table.csv)]
    return {"outputs": [str(p) for p in paths], "fingerprint": fp, "fused_mze": rep.fused_mze, "E": rep.E}


def cmd_sweep(config: RunConfig) -> dict:
    res = penetration_sweep(config)
    base = Path(config.out) / f"sweep-{_short(res.fingerprint)}"
    payload = dict(res.to_dict(), config_fingerprint=config.fingerprint, config=config.to_dict())
    paths = [write_atomic(base.with_suffix(".csv"), res.to_csv()),
             write_atomic(base.with_suffix(".json"), _dump(payload))]
    return {"outputs": [str(p) for p in paths], "fingerprint": res.fingerprint,
            "points": [[p.penetration, p.mze, p.n_placements] for p in res.points]}


def cmd_forecast(config: RunConfig, model_path, windows_path) -> dict:
    bundle = _require(model_path, "model bundle")
    windows = _require(windows_path, "windows")
    try:
        model, manifest = load_bundle(bundle)
    except (BundleError, ValueError, KeyError) as exc:
        raise CommandError("schema", str(exc), "model") from None
    side_path = windows.with_suffix(".json")
    if side_path.exists():
        side = json.loads(side_path.read_text())
        for key in ("data_fingerprint", "feature_order", "A"):
            if key in side and key in manifest and side[key] != manifest[key]:
                raise CommandError("fingerprint_mismatch",
                                   f"windows {key} does not match the model bundle", key)
    try:
        X, _ = read_feature_csv(windows, manifest["n_features"])
    except ValueError as exc:
        raise CommandError("schema", str(exc), "windows") from None
    patterns = [tuple(p) for p in manifest.get("patterns", [])]
    fp = fingerprint({"model": manifest.get("fingerprint"), "windows": _file_digest(windows)})
    rows, E = [], None
    if len(X):
        members = model.member_predictions(X)
        decision = model.decide(X)
        conf = model.confidence(X)
        E = conf.index
        for i in range(len(X)):
            cls = int(decision.fused[i])
            rows.append({
                "window": i,
                "fused_class": cls,
                "label_vector": list(patterns[cls]) if cls < len(patterns) else None,
                "confidence": float(decision.confidence[i]),
                "accepted": bool(decision.accepted[i]),
                "flagged": bool(decision.flagged[i]),
                "members": {m: int(v[i]) for m, v in members.items()},
            })
    payload = {"fingerprint": fp, "model_fingerprint": manifest.get("fingerprint"),
               "config_fingerprint": manifest.get("config_fingerprint"), "E": E,
               "M": len(model.methods), "threshold": model.threshold, "forecasts": rows}
    path = write_atomic(Path(config.out) / f"forecast-{_short(fp)}.json", _dump(payload))
    return {"outputs": [str(path)], "fingerprint": fp, "n_windows": len(rows)}


# --- argument handling ------------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON RunConfig file")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("--out", help="output directory")
    common.add_argument("--set", action="append", default=[], metavar="KEY=JSON",
                        help="override any config field, e.g. --set sim.noise=[0,0,0,0]")
    for flag, (_, typ) in OVERRIDES.items():
        common.add_argument(f"--{flag.replace('_', '-')}", dest=flag, type=typ)
    common.add_argument("--penetrations", help="comma-separated penetration fractions")

    p = argparse.ArgumentParser(prog="gridcast", description="Line-trip forecasting from grid sensor windows.")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="write a measurement trace and event log")
    sub.add_parser("dataset", parents=[common], help="write a windowed, labeled dataset")
    t = sub.add_parser("train", parents=[common], help="fit the pipeline and write a model bundle")
    t.add_argument("--dataset", required=True)
    e = sub.add_parser("evaluate", parents=[common], help="cross-validate and write a report")
    e.add_argument("--dataset")
    sub.add_parser("sweep", parents=[common], help="fused MZE against sensor penetration")
    f = sub.add_parser("forecast", parents=[common], help="forecast trips for windows with a model bundle")
    f.add_argument("--model", required=True)
    f.add_argument("--windows", required=True)
    return p


def build_config(args) -> RunConfig:
    config = RunConfig.load(args.config) if args.config else RunConfig()
    overrides = {}
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(item, "expected KEY=VALUE")
        try:
            overrides[key] = json.loads(raw)
        except json.JSONDecodeError:
            overrides[key] = raw
    for flag, (dotted, _) in OVERRIDES.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[dotted] = value
    if args.penetrations:
        try:
            overrides["eval.penetrations"] = [float(v) for v in args.penetrations.split(",")]
        except ValueError:
            raise ConfigError("eval.penetrations", "expected comma-separated numbers") from None
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["out"] = args.out
    return config.with_overrides(overrides) if overrides else config


def run(argv=None) -> tuple[int, dict]:
    args = _parser().parse_args(argv)
    try:
        config = build_config(args)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            if args.command == "simulate":
                result = cmd_simulate(config)
            elif args.command == "dataset":
                result = cmd_dataset(config)
            elif args.command == "train":
                result = cmd_train(config, args.dataset)
            elif args.command == "evaluate":
                result = cmd_evaluate(config, args.dataset)
            elif args.command == "sweep":
                result = cmd_sweep(config)
            else:
                result = cmd_forecast(config, args.model, args.windows)
    except ConfigError as exc:
        return 2, {"status": "error", "error": "config", "field": exc.field, "message": exc.reason}
    except CommandError as exc:
        return 1, {"status": "error", "error": exc.kind, "field": exc.field, "message": str(exc)}
    except CaseError as exc:
        return 1, {"status": "error", "error": "case", "field": "sim.case", "message": str(exc)}
    except (ValueError, OSError) as exc:
        return 1, {"status": "error", "error": type(exc).__name__, "field": None, "message": str(exc)}
    return 0, dict({"status": "ok", "command": args.command}, **result)


def main(argv=None) -> int:
    code, payload = run(argv)
    stream = sys.stdout if code == 0 else sys.stderr
    stream.write(json.dumps(payload, sort_keys=True, default=str) + "\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
