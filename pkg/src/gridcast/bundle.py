"""Model bundles: a directory of JSON files described by a manifest."""
from __future__ import annotations

import json
import os
import shutil
import tempfile
from pathlib import Path

import numpy as np

from .dimred import pca_from_dict, pca_to_dict
from .fusion import VotingFusion
from .learners import model_from_dict, model_to_dict
from .pipeline import ForecastPipeline

BUNDLE_FORMAT = 1
MANIFEST = "manifest.json"


class BundleError(ValueError):
    """A bundle is missing files or does not match its manifest."""


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def write_atomic(path: str | Path, text: str) -> Path:
    """Write ``text`` to a temp file beside ``path`` and rename it into place."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def save_bundle(model: ForecastPipeline, path: str | Path, manifest_extra: dict | None = None) -> Path:
    """Serialize a fitted pipeline. The directory appears only once complete."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp"))
    try:
        files = {"pca": "pca.json"}
        (tmp / "pca.json").write_text(_dump(pca_to_dict(model.pca_, model.standardizer_)))
        for name, est in model.fusion_.named_estimators_.items():
            files[name] = f"model-{name}.json"
            (tmp / files[name]).write_text(_dump(model_to_dict(est)))
        fusion = {
            "methods": list(model.fusion_.named_estimators_),
            "weights": model.fusion_.weights_.tolist(),
            "threshold": float(model.fusion_.threshold),
            "classes": model.classes_.tolist(),
        }
        files["fusion"] = "fusion.json"
        (tmp / "fusion.json").write_text(_dump(fusion))
        manifest = {
            "format": BUNDLE_FORMAT,
            "files": files,
            "n_features": int(model.n_features_in_),
            "pipeline": json.loads(json.dumps(model.get_params(), default=list)),
            "param_counts": model.param_counts_,
        }
        manifest.update(manifest_extra or {})
        (tmp / MANIFEST).write_text(_dump(manifest))
        if path.exists():
            shutil.rmtree(path)
        os.replace(tmp, path)
    except BaseException:
        shutil.rmtree(tmp, ignore_errors=True)
        raise
    return path


def read_manifest(path: str | Path) -> dict:
    path = Path(path)
    mpath = path / MANIFEST
    if not mpath.is_file():
        raise BundleError(f"{path}: no {MANIFEST}")
    manifest = json.loads(mpath.read_text())
    if manifest.get("format") != BUNDLE_FORMAT:
        raise BundleError(f"{mpath}: unsupported bundle format {manifest.get('format')!r}")
    for key in ("files", "n_features"):
        if key not in manifest:
            raise BundleError(f"{mpath}: missing field {key!r}")
    return manifest


def load_bundle(path: str | Path) -> tuple[ForecastPipeline, dict]:
    """Rebuild a fitted pipeline; returns ``(model, manifest)``."""
    path = Path(path)
    manifest = read_manifest(path)
    files = manifest["files"]

    def read(name):
        f = path / files[name]
        if not f.is_file():
            raise BundleError(f"{path}: manifest lists missing file {files[name]}")
        return json.loads(f.read_text())

    fusion_rec = read("fusion")
    pca, std = pca_from_dict(read("pca"))
    if pca.n_features_in_ != manifest["n_features"]:
        raise BundleError(f"{path}: PCA expects {pca.n_features_in_} features, manifest says {manifest['n_features']}")
    members = [(m, model_from_dict(read(m))) for m in fusion_rec["methods"]]
    params = dict(manifest.get("pipeline", {}))
    params["methods"] = tuple(params.get("methods", fusion_rec["methods"]))
    model = ForecastPipeline(**params)
    model.n_features_in_ = manifest["n_features"]
    model.warnings_ = []
    model.standardizer_, model.pca_ = std, pca
    fusion = VotingFusion(members, weights=list(fusion_rec["weights"]), threshold=fusion_rec["threshold"])
    fusion.classes_ = np.asarray(fusion_rec["classes"])
    fusion.n_features_in_ = pca.n_components_
    fusion.weights_ = np.asarray(fusion_rec["weights"], dtype=float)
    fusion.named_estimators_ = dict(members)
    model.fusion_ = fusion
    model.classes_ = fusion.classes_
    return model, manifest
