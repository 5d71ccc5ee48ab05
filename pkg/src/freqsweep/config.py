"""Experiment configuration: profiles, file loading and the run manifest."""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .exceptions import ConfigurationError
from .raster import NoiseConfig, RenderConfig
from .subsample import FrequencyGrid, SampleSpec
from .train import TrainConfig
from .world import WorldConfig

MODES = ("sweep", "capacity_sweep", "matched_pair")


@dataclass(frozen=True)
class MatchedPairConfig:
    f_low: float = 6.0
    f_high: float = 10.0
    epochs_high: int = 5


@dataclass(frozen=True)
class ExperimentConfig:
    world: WorldConfig = field(default_factory=WorldConfig)
    render: RenderConfig = field(default_factory=RenderConfig)
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    sample_spec: SampleSpec = field(default_factory=SampleSpec)
    grid: FrequencyGrid = field(default_factory=lambda: FrequencyGrid((2.0, 4.0, 6.0, 8.0, 10.0)))
    widths: tuple = (4, 16)
    seeds: tuple = (0, 1, 2)
    train: TrainConfig = field(default_factory=TrainConfig)
    mode: str = "sweep"
    output_dir: str = "results"
    validation_scenes: int = 10
    noise_seed: int = 0
    matched_pair: MatchedPairConfig = field(default_factory=MatchedPairConfig)
    profile: str = "desk"

    def validate(self):
        self.world.validate()
        self.train.validate()
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}, got {self.mode!r}")
        if not self.seeds:
            raise ConfigurationError("seeds must be nonempty")
        if not self.widths:
            raise ConfigurationError("widths must be nonempty")
        self.grid.check_native(self.world.native_frequency)
        if self.validation_scenes < 1:
            raise ConfigurationError("validation_scenes must be >= 1")
        return self


DESK = {
    "world": {
        "num_scenes": 40,
        "scene_duration": 20.0,
        "native_frequency": 10.0,
        "speed_range": [4.0, 16.0],
        "curvature_range": [-0.04, 0.04],
        "num_agents_range": [2, 6],
        "map_density": 4,
        "seed": 0,
    },
    "render": {"image_size": 32, "meters_per_pixel": 1.0},
    "noise": {"background_sigma": 0.5, "jitter_max": 2, "enabled": True},
    "sample_spec": {
        "history_window": 1.0,
        "history_rate": 10.0,
        "bev_frame_offsets": [-0.5, 0.0],
        "horizon": 3.0,
        "spacing": 0.5,
    },
    "grid": [2, 4, 6, 8, 10],
    "widths": [4, 16],
    "seeds": [0, 1, 2],
    "train": {"learning_rate": 3e-3, "batch_size": 16, "epochs": 5, "seed": 0, "optimizer": "adam", "shuffle": True},
    "mode": "sweep",
    "validation_scenes": 10,
    "noise_seed": 0,
    "matched_pair": {"f_low": 6, "f_high": 10, "epochs_high": 5},
}

FULL = {
    **DESK,
    "world": {**DESK["world"], "num_scenes": 400},
    "render": {"image_size": 64, "meters_per_pixel": 0.5},
    "grid": [2, 4, 6, 7, 8, 9, 10],
    "widths": [16, 48, 64],
    "train": {**DESK["train"], "learning_rate": 1e-3, "batch_size": 32, "epochs": 10},
    "validation_scenes": 50,
}

PROFILES = {"desk": DESK, "full": FULL}


def _merge(base, override):
    out = dict(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _build(cls, data, name):
    if data is None:
        return cls()
    if not isinstance(data, dict):
        raise ConfigurationError(f"{name} must be a mapping")
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigurationError(f"unknown {name} keys: {sorted(unknown)}")
    kwargs = {k: tuple(v) if isinstance(v, list) else v for k, v in data.items()}
    try:
        return cls(**kwargs)
    except TypeError as e:
        raise ConfigurationError(f"{name}: {e}") from None


def config_from_dict(data, profile="desk"):
    if profile not in PROFILES:
        raise ConfigurationError(f"unknown profile {profile!r}")
    merged = _merge(PROFILES[profile], data or {})
    known = {f.name for f in dataclasses.fields(ExperimentConfig)}
    unknown = set(merged) - known
    if unknown:
        raise ConfigurationError(f"unknown config keys: {sorted(unknown)}")
    cfg = ExperimentConfig(
        world=_build(WorldConfig, merged["world"], "world"),
        render=_build(RenderConfig, merged["render"], "render"),
        noise=_build(NoiseConfig, merged["noise"], "noise"),
        sample_spec=_build(SampleSpec, merged["sample_spec"], "sample_spec"),
        grid=FrequencyGrid(tuple(merged["grid"])),
        widths=tuple(int(w) for w in merged["widths"]),
        seeds=tuple(int(s) for s in merged["seeds"]),
        train=_build(TrainConfig, merged["train"], "train"),
        mode=merged["mode"].replace("-", "_"),
        output_dir=str(merged.get("output_dir", "results")),
        validation_scenes=int(merged["validation_scenes"]),
        noise_seed=int(merged["noise_seed"]),
        matched_pair=_build(MatchedPairConfig, merged["matched_pair"], "matched_pair"),
        profile=profile,
    )
    return cfg.validate()


def load_config(path=None, profile="desk", overrides=None):
    """Read a YAML or JSON document (JSON is valid YAML) on top of a profile."""
    data = {}
    if path is not None:
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as e:
            raise ConfigurationError(f"cannot read config {path}: {e}") from None
        try:
            data = yaml.safe_load(text) or {}
        except yaml.YAMLError as e:
            raise ConfigurationError(f"cannot parse config {path}: {e}") from None
        if not isinstance(data, dict):
            raise ConfigurationError(f"{path}: top level must be a mapping")
        profile = data.pop("profile", profile)
    if overrides:
        data = _merge(data, overrides)
    return config_from_dict(data, profile=profile)


def _plain(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _plain(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def config_to_dict(config):
    d = _plain(config)
    d["grid"] = list(config.grid.frequencies)
    return d


def manifest_json(config, extra=None):
    """Deterministic JSON manifest echoing every knob of the run."""
    from . import __version__

    doc = {"package_version": __version__, "config": config_to_dict(config)}
    if extra:
        doc.update(extra)
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"
