"""Temporal subsampling of native timelines into frequency-induced datasets."""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, EmptyDatasetError, EmptyInputError, FrequencyError
from .validation import check_positive
from .world import TIME_TOL, COMMANDS, ego_history, future_target, scene_key


@dataclass(frozen=True)
class FrequencyGrid:
    frequencies: tuple

    def __post_init__(self):
        freqs = tuple(float(f) for f in self.frequencies)
        if not freqs:
            raise ConfigurationError("frequency grid is empty")
        for f in freqs:
            if not math.isfinite(f) or f <= 0:
                raise ConfigurationError(f"frequencies must be positive, got {f!r}")
        if any(b <= a for a, b in zip(freqs, freqs[1:])):
            raise ConfigurationError("frequency grid must be strictly increasing")
        object.__setattr__(self, "frequencies", freqs)

    def __iter__(self):
        return iter(self.frequencies)

    def __len__(self):
        return len(self.frequencies)

    @property
    def max(self):
        return self.frequencies[-1]

    def check_native(self, native_frequency):
        if native_frequency is not None and self.max > native_frequency + TIME_TOL:
            raise FrequencyError(f"grid maximum {self.max} Hz exceeds native {native_frequency} Hz")


@dataclass(frozen=True)
class AnchorSet:
    scene_id: str | None
    frequency: float
    anchors: tuple
    indices: tuple = ()

    def __len__(self):
        return len(self.anchors)


@dataclass(frozen=True)
class SampleSpec:
    history_window: float = 1.0
    history_rate: float = 10.0
    bev_frame_offsets: tuple = (-0.5, 0.0)
    horizon: float = 3.0
    spacing: float = 0.5

    def __post_init__(self):
        check_positive(self.history_window, "history_window")
        check_positive(self.history_rate, "history_rate")
        check_positive(self.horizon, "horizon")
        check_positive(self.spacing, "spacing")
        offsets = tuple(float(o) for o in self.bev_frame_offsets)
        if any(o > 0 for o in offsets) or 0.0 not in offsets:
            raise ConfigurationError("bev_frame_offsets must be <= 0 and include 0")
        ratio = self.horizon / self.spacing
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigurationError("horizon must be an integer multiple of spacing")
        object.__setattr__(self, "bev_frame_offsets", offsets)

    @property
    def num_waypoints(self):
        return int(round(self.horizon / self.spacing))

    @property
    def history_length(self):
        return int(round(self.history_window * self.history_rate)) + 1

    @property
    def history_dim(self):
        # x, y, heading, speed per history sample
        return 4 * self.history_length


@dataclass(frozen=True, eq=False)
class TrainingSample:
    scene_id: str
    anchor_t: float
    frames: np.ndarray
    history: object
    command: str
    target: object

    def command_onehot(self):
        v = np.zeros(len(COMMANDS))
        v[COMMANDS.index(self.command)] = 1.0
        return v

    def to_bytes(self):
        """Canonical serialization of ``(x, y)``; equal bytes mean equal samples."""
        sid = self.scene_id.encode("utf-8")
        parts = [
            struct.pack("<I", len(sid)),
            sid,
            struct.pack("<d", self.anchor_t),
            struct.pack("<I", self.frames.ndim),
            struct.pack(f"<{self.frames.ndim}I", *self.frames.shape),
            np.ascontiguousarray(self.frames, dtype="<f8").tobytes(),
            struct.pack("<2I", *self.history.samples.shape),
            np.ascontiguousarray(self.history.samples, dtype="<f8").tobytes(),
            self.command.encode("ascii").ljust(8, b"\0"),
            struct.pack("<I", len(self.target.points)),
            np.ascontiguousarray(self.target.points, dtype="<f8").tobytes(),
        ]
        return b"".join(parts)


@dataclass(frozen=True, eq=False)
class FrequencyDataset:
    frequency: float
    samples: tuple
    role: str = "train"
    _arrays: dict = field(default_factory=dict, repr=False)

    def __len__(self):
        return len(self.samples)

    def arrays(self):
        """Stacked ``(frames, history_features, command_onehot, targets)``."""
        if not self._arrays:
            self._arrays["v"] = stack_samples(self.samples)
        return self._arrays["v"]


def stack_samples(samples):
    frames = np.stack([s.frames for s in samples])
    hist = np.stack([s.history.features() for s in samples])
    cmd = np.stack([s.command_onehot() for s in samples])
    tgt = np.stack([s.target.points for s in samples])
    return frames, hist, cmd, tgt


# -- timestamp selection --------------------------------------------------------


def _native_period(native):
    if len(native) < 2:
        return None
    return float(np.median(np.diff(native)))


def sample_timestamps(native, f, scene_id=None):
    """Select anchors at frequency ``f`` from a native timeline.

    Ideal times ``t0 + j / f`` are snapped to the nearest native timestamp
    (earlier one on ties) and duplicates dropped, so the phase never drifts.
    """
    native = np.asarray(native, dtype=np.float64)
    if native.size == 0:
        raise EmptyInputError("native timestamp list is empty")
    if not math.isfinite(f) or f <= 0:
        raise FrequencyError(f"frequency must be positive, got {f!r}")
    period = _native_period(native)
    if period is not None and f > 1.0 / period + 1e-6:
        raise FrequencyError(f"f={f} Hz exceeds the native rate {1.0 / period:.6g} Hz")
    t0, t_end = native[0], native[-1]
    count = int(math.floor((t_end - t0) * f + 1e-9)) + 1
    ideal = t0 + np.arange(count) / f
    right = np.clip(np.searchsorted(native, ideal), 0, len(native) - 1)
    left = np.clip(right - 1, 0, len(native) - 1)
    pick_left = np.abs(native[left] - ideal) <= np.abs(native[right] - ideal)
    idx = np.where(pick_left, left, right)
    keep = np.concatenate([[True], idx[1:] > idx[:-1]])
    idx = idx[keep]
    return AnchorSet(
        scene_id=scene_id,
        frequency=float(f),
        anchors=tuple(float(native[i]) for i in idx),
        indices=tuple(int(i) for i in idx),
    )


def is_valid_anchor(scene, t, spec):
    lo = min([-spec.history_window] + [o for o in spec.bev_frame_offsets])
    return t + lo >= scene.start - TIME_TOL and t + spec.horizon <= scene.end + TIME_TOL


def filter_valid_anchors(anchorset, scene, spec):
    keep = [
        (t, i)
        for t, i in zip(anchorset.anchors, anchorset.indices or [scene.index_of(t) for t in anchorset.anchors])
        if is_valid_anchor(scene, t, spec)
    ]
    return AnchorSet(
        scene_id=anchorset.scene_id,
        frequency=anchorset.frequency,
        anchors=tuple(t for t, _ in keep),
        indices=tuple(i for _, i in keep),
    )


def scene_anchors(scene, f, spec):
    return filter_valid_anchors(sample_timestamps(scene.native_timestamps, f, scene.scene_id), scene, spec)


# -- sample materialization -------------------------------------------------------


class SampleBuilder:
    """Materializes and memoizes :class:`TrainingSample` objects.

    Samples are keyed by ``(scene_id, native index)``, so datasets built at
    different frequencies share the very same objects for shared anchors.
    The noise stream of a sample depends only on ``(noise_seed, scene, anchor)``.
    """

    def __init__(self, spec, render=None, noise=None, noise_seed=0):
        from .raster import NoiseConfig, RenderConfig

        self.spec = spec
        self.render = render if render is not None else RenderConfig()
        self.noise = noise if noise is not None else NoiseConfig()
        self.noise_seed = int(noise_seed)
        self._cache = {}

    def sample(self, scene, t, index=None):
        from .raster import temporal_stack

        if index is None:
            index = scene.index_of(t)
        key = (scene.scene_id, index)
        cached = self._cache.get(key)
        if cached is not None:
            return cached
        rng = np.random.default_rng(
            np.random.SeedSequence([self.noise_seed & 0xFFFFFFFFFFFFFFFF, scene_key(scene.scene_id), index])
        )
        frames = temporal_stack(scene, t, self.spec, self.render, self.noise, rng)
        data = frames.data
        data.setflags(write=False)
        s = TrainingSample(
            scene_id=scene.scene_id,
            anchor_t=t,
            frames=data,
            history=ego_history(scene, t, self.spec),
            command=scene.command_at(t, self.spec.horizon),
            target=future_target(scene, t, self.spec),
        )
        self._cache[key] = s
        return s


def _build(scenes, f, spec, builder, role):
    builder = builder if builder is not None else SampleBuilder(spec)
    samples = []
    for scene in sorted(scenes, key=lambda s: s.scene_id):
        anchors = scene_anchors(scene, f, spec)
        for t, i in zip(anchors.anchors, anchors.indices):
            samples.append(builder.sample(scene, t, i))
    if not samples:
        raise EmptyDatasetError(f"no valid anchors at f={f} Hz")
    return FrequencyDataset(frequency=float(f), samples=tuple(samples), role=role)


def build_training_set(scenes, f, spec, builder=None):
    if scenes.role != "train":
        raise ConfigurationError("build_training_set expects a train scene set")
    if scenes.native_frequency is not None and f > scenes.native_frequency + TIME_TOL:
        raise FrequencyError(f"f={f} exceeds native frequency {scenes.native_frequency}")
    return _build(scenes, f, spec, builder, "train")


def build_validation_set(scenes, grid, spec, builder=None):
    """Validation anchors sampled once at the grid maximum."""
    if scenes.role != "validation":
        raise ConfigurationError("build_validation_set expects a validation scene set")
    grid.check_native(scenes.native_frequency)
    return _build(scenes, grid.max, spec, builder, "validation")


def dataset_census(grid, scenes, spec):
    """Valid-anchor counts per frequency, without rendering any sample."""
    grid.check_native(scenes.native_frequency)
    rows = []
    for f in grid:
        rows.append((f, sum(len(scene_anchors(s, f, spec)) for s in scenes)))
    return rows
