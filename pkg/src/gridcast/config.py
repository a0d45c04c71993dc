"""Run configuration, fingerprints and seed derivation."""
from __future__ import annotations

import dataclasses
import hashlib
import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .grid.simulate import DEFAULT_NOISE
from .learners import DEFAULT_CONFIGS, KINDS

METHODS = ("svm", "logistic", "tree", "knn", "gnb")
DEFAULT_PENETRATIONS = (0.05, 0.10, 0.15, 0.20, 0.25, 0.30)


class ConfigError(ValueError):
    """A configuration field is unknown or out of range."""

    def __init__(self, field_name: str, reason: str):
        super().__init__(f"{field_name}: {reason}")
        self.field = field_name
        self.reason = reason


def _default_classifiers() -> dict:
    cfg = {k: dict(v) for k, v in DEFAULT_CONFIGS.items()}
    # classes too rare to estimate a variance are left to the other members
    cfg["gnb"] = {"rare_classes": "drop"}
    return cfg


@dataclass(frozen=True)
class SimConfig:
    case: str = "ieee30"
    days: int = 150
    slot_seconds: float = 180.0
    stress_fraction: float = 0.8
    trip_slots: int = 10
    noise: tuple[float, float, float, float] = DEFAULT_NOISE
    load_noise: float = 0.01
    penetration: float = 0.2

    def check(self):
        if self.days < 1:
            raise ConfigError("sim.days", "must be >= 1")
        if self.slot_seconds <= 0 or 86400 % self.slot_seconds:
            raise ConfigError("sim.slot_seconds", "must be positive and divide one day")
        if not 0.0 <= self.stress_fraction <= 1.0:
            raise ConfigError("sim.stress_fraction", "must lie in [0, 1]")
        if self.trip_slots < 2:
            raise ConfigError("sim.trip_slots", "must be >= 2 so an overload precedes its trip")
        if len(self.noise) != 4 or any(v < 0 for v in self.noise):
            raise ConfigError("sim.noise", "needs 4 nonnegative per-channel stds (vm, va, p, q)")
        if self.load_noise < 0:
            raise ConfigError("sim.load_noise", "must be >= 0")
        if not 0.0 < self.penetration <= 1.0:
            raise ConfigError("sim.penetration", "must lie in (0, 1]")


@dataclass(frozen=True)
class WindowConfig:
    length: int = 166
    stride: int = 10
    horizon: int = 30

    def check(self):
        if self.length < 1:
            raise ConfigError("window.length", "must be >= 1")
        if self.stride < 1:
            raise ConfigError("window.stride", "must be >= 1")
        if self.horizon < 0:
            raise ConfigError("window.horizon", "must be >= 0")


@dataclass(frozen=True)
class PipelineConfig:
    k_pca: int = 50
    standardize: bool = True
    whiten: bool = False
    methods: tuple[str, ...] = METHODS
    classifiers: dict = field(default_factory=_default_classifiers)
    weights: str = "uniform"
    threshold: float = 0.5

    def check(self):
        if self.k_pca < 1:
            raise ConfigError("pipeline.k_pca", "must be >= 1")
        if len(self.methods) < 2:
            raise ConfigError("pipeline.methods", "fusion needs at least 2 methods")
        for m in self.methods:
            if m not in KINDS:
                raise ConfigError("pipeline.methods", f"unknown method {m!r}")
        for m in self.classifiers:
            if m not in KINDS:
                raise ConfigError("pipeline.classifiers", f"unknown method {m!r}")
        if self.weights not in ("uniform", "accuracy"):
            raise ConfigError("pipeline.weights", "must be 'uniform' or 'accuracy'")
        if not 0.0 <= self.threshold <= 1.0:
            raise ConfigError("pipeline.threshold", "must lie in [0, 1]")

    def classifier_config(self, kind: str) -> dict:
        return dict(self.classifiers.get(kind, DEFAULT_CONFIGS[kind]))


@dataclass(frozen=True)
class EvalConfig:
    folds: int = 3
    penetrations: tuple[float, ...] = DEFAULT_PENETRATIONS
    placements: int = 5

    def check(self):
        if self.folds < 2:
            raise ConfigError("eval.folds", "must be >= 2")
        if not self.penetrations:
            raise ConfigError("eval.penetrations", "must be nonempty")
        if any(not 0.0 < p <= 1.0 for p in self.penetrations):
            raise ConfigError("eval.penetrations", "each must lie in (0, 1]")
        if list(self.penetrations) != sorted(set(self.penetrations)):
            raise ConfigError("eval.penetrations", "must be strictly increasing")
        if self.placements < 1:
            raise ConfigError("eval.placements", "must be >= 1")


_SECTIONS = {"sim": SimConfig, "window": WindowConfig, "pipeline": PipelineConfig, "eval": EvalConfig}


@dataclass(frozen=True)
class RunConfig:
    sim: SimConfig = field(default_factory=SimConfig)
    window: WindowConfig = field(default_factory=WindowConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    seed: int = 0
    out: str = "out"

    def __post_init__(self):
        for name in _SECTIONS:
            getattr(self, name).check()
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError("seed", "must be a nonnegative integer")

    # -- (de)serialization --------------------------------------------------------
    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        return json.loads(json.dumps(d))  # tuples -> lists

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        if not isinstance(data, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        known = {f.name for f in fields(cls)}
        for key in data:
            if key not in known:
                raise ConfigError(key, "unknown key")
        kwargs = {}
        for name, section in _SECTIONS.items():
            if name in data:
                kwargs[name] = _build_section(name, section, data[name])
        for key in ("seed", "out"):
            if key in data:
                kwargs[key] = data[key]
        return cls(**kwargs)

    @classmethod
    def load(cls, path: str | Path) -> "RunConfig":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError("<file>", f"invalid JSON: {exc}") from None
        return cls.from_dict(data)

    def with_overrides(self, overrides: dict) -> "RunConfig":
        """Apply dotted-key overrides such as ``{"sim.days": 10}``."""
        data = self.to_dict()
        for key, value in overrides.items():
            parts = key.split(".")
            node = data
            for p in parts[:-1]:
                if not isinstance(node.get(p), dict):
                    raise ConfigError(key, "unknown key")
                node = node[p]
            if parts[-1] not in node:
                raise ConfigError(key, "unknown key")
            node[parts[-1]] = value
        return RunConfig.from_dict(data)

    # -- identity -----------------------------------------------------------------
    def fingerprint_payload(self) -> dict:
        d = self.to_dict()
        d.pop("out")
        return d

    @property
    def fingerprint(self) -> str:
        return fingerprint(self.fingerprint_payload())

    def data_fingerprint(self, penetration: float | None = None, placement: int = 0) -> str:
        """Identity of a dataset: everything that shapes the windows, nothing about training."""
        sim = self.to_dict()["sim"]
        if penetration is not None:
            sim["penetration"] = penetration
        return fingerprint({"sim": sim, "window": self.to_dict()["window"], "seed": self.seed,
                            "placement": placement})


def _build_section(name, cls, data):
    if not isinstance(data, dict):
        raise ConfigError(name, "must be a JSON object")
    known = {f.name: f for f in fields(cls)}
    kwargs = {}
    for key, value in data.items():
        if key not in known:
            raise ConfigError(f"{name}.{key}", "unknown key")
        kwargs[key] = _coerce(f"{name}.{key}", known[key], value)
    return cls(**kwargs)


def _coerce(path, f, value):
    default = f.default if f.default is not dataclasses.MISSING else f.default_factory()
    if isinstance(default, bool):
        if not isinstance(value, bool):
            raise ConfigError(path, "must be a boolean")
        return value
    if isinstance(default, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(path, "must be an integer")
        return value
    if isinstance(default, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(path, "must be a number")
        return float(value)
    if isinstance(default, str):
        if not isinstance(value, str):
            raise ConfigError(path, "must be a string")
        return value
    if isinstance(default, tuple):
        if not isinstance(value, (list, tuple)):
            raise ConfigError(path, "must be a list")
        if default and isinstance(default[0], str):
            return tuple(str(v) for v in value)
        if any(isinstance(v, bool) or not isinstance(v, (int, float)) for v in value):
            raise ConfigError(path, "must be a list of numbers")
        return tuple(float(v) for v in value)
    if isinstance(default, dict):
        if not isinstance(value, dict) or any(not isinstance(v, dict) for v in value.values()):
            raise ConfigError(path, "must map method names to option objects")
        merged = dict(default)
        merged.update({k: dict(v) for k, v in value.items()})
        return merged
    return value


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def fingerprint(payload) -> str:
    return hashlib.sha256(canonical_json(payload).encode()).hexdigest()


def derive_seed(master: int, tag: str, *index) -> int:
    """Child seed from ``(master, tag, index...)``; stable across platforms and runs."""
    text = canonical_json([int(master), str(tag), [repr(i) for i in index]])
    return int.from_bytes(hashlib.sha256(text.encode()).digest()[:8], "big") >> 1
