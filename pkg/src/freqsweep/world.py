"""Synthetic driving scenes and per-anchor ego histories / future targets.

Scenes are generated from a seed with piecewise constant-curvature ego motion,
constant-velocity agents and straight/arc map polylines. All geometry helpers
use the ego frame convention: origin at the anchor pose, x forward, y left.
"""

from __future__ import annotations

import math
import zlib
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .exceptions import (
    AnchorError,
    ConfigurationError,
    EmptyInputError,
    FrequencyError,
    ValidityError,
)
from .validation import check_int, check_positive, check_range

TIME_TOL = 1e-9
COMMANDS = ("left", "straight", "right")
COMMAND_THRESHOLD = math.radians(15.0)


def wrap_angle(a):
    """Wrap angles to ``[-pi, pi)``."""
    return (np.asarray(a, dtype=np.float64) + np.pi) % (2.0 * np.pi) - np.pi


class TrajectoryPoint(NamedTuple):
    t: float
    x: float
    y: float
    heading: float
    speed: float


@dataclass(frozen=True)
class WorldConfig:
    num_scenes: int = 40
    scene_duration: float = 20.0
    native_frequency: float = 10.0
    speed_range: tuple = (4.0, 16.0)
    curvature_range: tuple = (-0.04, 0.04)
    num_agents_range: tuple = (2, 6)
    map_density: int = 4
    seed: int = 0

    def validate(self):
        check_int(self.num_scenes, "num_scenes", minimum=0)
        check_positive(self.scene_duration, "scene_duration")
        check_positive(self.native_frequency, "native_frequency")
        lo, _ = check_range(self.speed_range, "speed_range")
        if lo < 0:
            raise ConfigurationError("speed_range must be non-negative")
        check_range(self.curvature_range, "curvature_range")
        a_lo, a_hi = check_range(self.num_agents_range, "num_agents_range")
        check_int(a_lo, "num_agents_range[0]", minimum=0)
        check_int(a_hi, "num_agents_range[1]", minimum=0)
        check_int(self.map_density, "map_density", minimum=0)
        check_int(self.seed, "seed")
        return self


@dataclass(frozen=True, eq=False)
class AgentTrack:
    """A possibly partial agent track on the native grid.

    ``states`` rows are ``(x, y, heading, speed)`` for native indices
    ``start_index .. start_index + len(states) - 1``.
    """

    agent_id: int
    start_index: int
    states: np.ndarray
    length: float = 4.5
    width: float = 2.0

    @property
    def end_index(self):
        return self.start_index + len(self.states) - 1


@dataclass(frozen=True, eq=False)
class Scene:
    scene_id: str
    native_frequency: float
    native_timestamps: np.ndarray
    ego_states: np.ndarray  # (n, 4): x, y, heading, speed
    agents: tuple = ()
    map_polylines: tuple = ()
    ego_length: float = 4.5
    ego_width: float = 2.0
    _unwrapped: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        ts = np.asarray(self.native_timestamps, dtype=np.float64)
        ego = np.asarray(self.ego_states, dtype=np.float64)
        if ts.ndim != 1 or len(ts) == 0:
            raise ConfigurationError("native_timestamps must be a nonempty 1-D sequence")
        gaps = np.diff(ts)
        if np.any(gaps <= 0):
            raise ConfigurationError("native_timestamps must be strictly increasing")
        if np.any(np.abs(gaps - 1.0 / self.native_frequency) > TIME_TOL):
            raise ConfigurationError("native timestamp gaps must equal 1/native_frequency")
        if ego.shape != (len(ts), 4):
            raise ConfigurationError(f"ego_states shape {ego.shape} does not match {len(ts)} timestamps")
        ts.setflags(write=False)
        ego.setflags(write=False)
        object.__setattr__(self, "native_timestamps", ts)
        object.__setattr__(self, "ego_states", ego)
        unwrapped = np.unwrap(ego[:, 2])
        unwrapped.setflags(write=False)
        object.__setattr__(self, "_unwrapped", unwrapped)

    @property
    def start(self):
        return float(self.native_timestamps[0])

    @property
    def end(self):
        return float(self.native_timestamps[-1])

    @property
    def ego(self):
        return [TrajectoryPoint(float(t), *map(float, s)) for t, s in zip(self.native_timestamps, self.ego_states)]

    def index_of(self, t):
        """Native index of ``t``; raises :class:`AnchorError` off the grid."""
        i = int(round((t - self.start) * self.native_frequency))
        if i < 0 or i >= len(self.native_timestamps) or abs(self.native_timestamps[i] - t) > TIME_TOL:
            raise AnchorError(f"t={t!r} is not a native timestamp of scene {self.scene_id}")
        return i

    def contains(self, t):
        return self.start - TIME_TOL <= t <= self.end + TIME_TOL

    def ego_state_at(self, times):
        """Linearly interpolated ego ``(x, y, heading, speed)`` at ``times``."""
        times = np.atleast_1d(np.asarray(times, dtype=np.float64))
        if np.any(times < self.start - TIME_TOL) or np.any(times > self.end + TIME_TOL):
            raise ValidityError(f"time outside scene span [{self.start}, {self.end}]")
        ts = self.native_timestamps
        times = np.clip(times, ts[0], ts[-1])
        x = np.interp(times, ts, self.ego_states[:, 0])
        y = np.interp(times, ts, self.ego_states[:, 1])
        h = wrap_angle(np.interp(times, ts, self._unwrapped))
        v = np.interp(times, ts, self.ego_states[:, 3])
        return np.stack([x, y, h, v], axis=1)

    def agent_states_at(self, t):
        """Agent states active at ``t`` as rows ``(x, y, heading, length, width)``."""
        pos = (t - self.start) * self.native_frequency
        rows = []
        for a in self.agents:
            if pos < a.start_index - TIME_TOL or pos > a.end_index + TIME_TOL:
                continue
            local = np.clip(pos - a.start_index, 0.0, len(a.states) - 1)
            i0 = int(math.floor(local))
            i1 = min(i0 + 1, len(a.states) - 1)
            w = local - i0
            s = (1.0 - w) * a.states[i0] + w * a.states[i1]
            rows.append((s[0], s[1], a.states[i0, 2], a.length, a.width))
        return np.asarray(rows, dtype=np.float64).reshape(-1, 5)

    def command_at(self, t, horizon):
        """Navigation command from the net heading change over ``[t, t + horizon]``."""
        t_end = min(t + horizon, self.end)
        h0, h1 = np.interp([t, t_end], self.native_timestamps, self._unwrapped)
        dh = h1 - h0
        if dh > COMMAND_THRESHOLD:
            return "left"
        if dh < -COMMAND_THRESHOLD:
            return "right"
        return "straight"


@dataclass(frozen=True, eq=False)
class SceneSet:
    scenes: tuple
    role: str = "train"

    def __post_init__(self):
        if self.role not in ("train", "validation"):
            raise ConfigurationError(f"role must be 'train' or 'validation', got {self.role!r}")
        scenes = tuple(self.scenes)
        ids = [s.scene_id for s in scenes]
        if len(set(ids)) != len(ids):
            raise ConfigurationError("scene_ids must be unique")
        if len({s.native_frequency for s in scenes}) > 1:
            raise ConfigurationError("all scenes must share one native_frequency")
        object.__setattr__(self, "scenes", scenes)

    def __len__(self):
        return len(self.scenes)

    def __iter__(self):
        return iter(self.scenes)

    @property
    def native_frequency(self):
        return self.scenes[0].native_frequency if self.scenes else None


@dataclass(frozen=True)
class EgoHistory:
    """Rows ``(relative_t, x, y, heading, speed)`` in the anchor ego frame."""

    samples: np.ndarray

    def features(self):
        return self.samples[:, 1:].reshape(-1)


@dataclass(frozen=True)
class Waypoints:
    points: np.ndarray
    spacing: float
    horizon: float


def to_ego_frame(xy, pose):
    """World ``(x, y)`` rows into the frame of ``pose = (x, y, heading)``."""
    xy = np.asarray(xy, dtype=np.float64)
    c, s = math.cos(pose[2]), math.sin(pose[2])
    dx = xy[..., 0] - pose[0]
    dy = xy[..., 1] - pose[1]
    return np.stack([c * dx + s * dy, -s * dx + c * dy], axis=-1)


def from_ego_frame(xy, pose):
    xy = np.asarray(xy, dtype=np.float64)
    c, s = math.cos(pose[2]), math.sin(pose[2])
    return np.stack([pose[0] + c * xy[..., 0] - s * xy[..., 1], pose[1] + s * xy[..., 0] + c * xy[..., 1]], axis=-1)


# -- generation ---------------------------------------------------------------


def _arc_advance(x, y, h, kappa, ds):
    """Exact pose after travelling arc length ``ds`` at constant curvature."""
    if abs(kappa) < 1e-12:
        return x + ds * np.cos(h), y + ds * np.sin(h), h + 0.0 * ds
    h1 = h + kappa * ds
    return x + (np.sin(h1) - np.sin(h)) / kappa, y - (np.cos(h1) - np.cos(h)) / kappa, h1


def _ego_profile(rng, n, fn, config):
    """Arc length, speed and curvature per native sample.

    Speed ramps linearly towards a fresh target each segment, so the arc length
    inside a segment is an exact quadratic in time.
    """
    v_lo, v_hi = config.speed_range
    k_lo, k_hi = config.curvature_range
    t = np.arange(n) / fn
    speed = np.empty(n)
    kappa = np.empty(n)
    arc = np.empty(n)
    v0 = rng.uniform(v_lo, v_hi)
    s0 = 0.0
    seg_start = 0.0
    duration = t[-1]
    while True:
        seg_len = rng.uniform(2.0, 5.0)
        seg_end = seg_start + seg_len
        v1 = rng.uniform(v_lo, v_hi)
        k = rng.uniform(k_lo, k_hi)
        mask = (t >= seg_start - TIME_TOL) & (t < seg_end - TIME_TOL) if seg_end < duration else t >= seg_start - TIME_TOL
        tau = t[mask] - seg_start
        acc = (v1 - v0) / seg_len
        speed[mask] = v0 + acc * tau
        arc[mask] = s0 + v0 * tau + 0.5 * acc * tau**2
        kappa[mask] = k
        if seg_end >= duration:
            break
        s0 += v0 * seg_len + 0.5 * acc * seg_len**2
        v0 = v1
        seg_start = seg_end
    return arc, np.maximum(speed, 0.0), kappa


def _integrate_path(arc, kappa, x0, y0, h0):
    """Poses along a piecewise constant-curvature path, integrated exactly."""
    n = len(arc)
    xs, ys, hs = np.empty(n), np.empty(n), np.empty(n)
    xs[0], ys[0], hs[0] = x0, y0, h0
    for i in range(1, n):
        # curvature of the interval is the curvature at its start
        xs[i], ys[i], hs[i] = _arc_advance(xs[i - 1], ys[i - 1], hs[i - 1], kappa[i - 1], arc[i] - arc[i - 1])
    return xs, ys, hs


def _make_agents(rng, ego, n, fn, config):
    lo, hi = config.num_agents_range
    count = int(rng.integers(lo, hi + 1))
    v_lo, v_hi = config.speed_range
    agents = []
    for k in range(count):
        start = int(rng.integers(0, max(1, int(0.6 * n))))
        life = int(rng.integers(max(1, int(0.3 * n)), n + 1))
        stop = min(n - 1, start + life)
        ref = ego[int(rng.integers(0, n))]
        lateral = rng.choice([-1.0, 1.0]) * rng.uniform(3.0, 8.0)
        longitudinal = rng.uniform(-10.0, 30.0)
        c, s = math.cos(ref[2]), math.sin(ref[2])
        px = ref[0] + c * longitudinal - s * lateral
        py = ref[1] + s * longitudinal + c * lateral
        heading = ref[2] + rng.uniform(-0.3, 0.3)
        if rng.random() < 0.3:
            heading += math.pi
        speed = rng.uniform(v_lo, v_hi)
        # place the agent so it passes the sampled point halfway through its life
        tt = (np.arange(start, stop + 1) - 0.5 * (start + stop)) / fn
        xs = px + speed * math.cos(heading) * tt
        ys = py + speed * math.sin(heading) * tt
        states = np.stack(
            [xs, ys, np.full_like(xs, float(wrap_angle(heading))), np.full_like(xs, speed)], axis=1
        )
        states.setflags(write=False)
        agents.append(AgentTrack(agent_id=k, start_index=start, states=states))
    return tuple(agents)


def _make_map(rng, ego, arc, kappa, config):
    polylines = []
    if config.map_density <= 0:
        return ()
    # road edges follow the ego path, so the raster carries upcoming curvature
    total = arc[-1]
    margin = 30.0
    step = 1.0
    s_grid = np.arange(-margin, total + margin + step, step)
    half_width = rng.uniform(3.0, 4.5)
    pts = _path_points(ego, arc, kappa, s_grid)
    normal = np.stack([-np.sin(pts[:, 2]), np.cos(pts[:, 2])], axis=1)
    edges = [pts[:, :2] + half_width * normal, pts[:, :2] - half_width * normal]
    for e in edges[: config.map_density]:
        e = np.ascontiguousarray(e)
        e.setflags(write=False)
        polylines.append(e)
    for _ in range(config.map_density - len(polylines)):
        ref = ego[int(rng.integers(0, len(ego)))]
        along = rng.uniform(-15.0, 40.0)
        c, s = math.cos(ref[2]), math.sin(ref[2])
        cx, cy = ref[0] + c * along, ref[1] + s * along
        heading = rng.uniform(-math.pi, math.pi)
        k = 0.0 if rng.random() < 0.5 else rng.uniform(-0.05, 0.05)
        ss = np.arange(-25.0, 25.0 + step, step)
        x, y, _ = _arc_advance(cx, cy, heading, k, ss)
        line = np.stack([x, y], axis=1)
        line.setflags(write=False)
        polylines.append(line)
    return tuple(polylines)


def _path_points(ego, arc, kappa, s_query):
    """Poses at arbitrary arc lengths, extrapolating straight beyond the ends."""
    out = np.empty((len(s_query), 3))
    idx = np.clip(np.searchsorted(arc, s_query, side="right") - 1, 0, len(arc) - 1)
    for j, (s, i) in enumerate(zip(s_query, idx)):
        k = kappa[i] if 0.0 <= s <= arc[-1] else 0.0
        x, y, h = _arc_advance(ego[i, 0], ego[i, 1], ego[i, 2], k, s - arc[i])
        out[j] = (x, y, h)
    return out


def generate_scene(seed, config, scene_id=None):
    """Synthesize one scene; a pure function of ``(seed, config)``."""
    config.validate()
    fn = float(config.native_frequency)
    n = int(round(config.scene_duration * fn)) + 1
    if n < 2:
        raise ConfigurationError("scene_duration too short for the native frequency")
    rng = np.random.default_rng(np.random.SeedSequence(int(seed) & 0xFFFFFFFFFFFFFFFF))
    arc, speed, kappa = _ego_profile(rng, n, fn, config)
    h0 = rng.uniform(-math.pi, math.pi)
    xs, ys, hs = _integrate_path(arc, kappa, 0.0, 0.0, h0)
    ego_unwrapped = np.stack([xs, ys, hs], axis=1)
    ego = np.stack([xs, ys, wrap_angle(hs), speed], axis=1)
    agents = _make_agents(rng, ego_unwrapped, n, fn, config)
    polylines = _make_map(rng, ego_unwrapped, arc, kappa, config)
    timestamps = np.arange(n) / fn
    return Scene(
        scene_id=scene_id if scene_id is not None else f"scene-{int(seed) & 0xFFFFFFFFFFFFFFFF:016x}",
        native_frequency=fn,
        native_timestamps=timestamps,
        ego_states=ego,
        agents=agents,
        map_polylines=polylines,
    )


_ROLE_CODES = {"train": 1, "validation": 2}


def scene_seed(base_seed, role, index):
    ss = np.random.SeedSequence([int(base_seed) & 0xFFFFFFFFFFFFFFFF, _ROLE_CODES[role], index])
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return (int(hi) << 32) | int(lo)


def generate_scene_set(config, role="train", num_scenes=None):
    """Generate ``num_scenes`` scenes with ids ordered like their indices."""
    config.validate()
    count = config.num_scenes if num_scenes is None else num_scenes
    scenes = [
        generate_scene(scene_seed(config.seed, role, i), config, scene_id=f"{role}-{i:05d}")
        for i in range(count)
    ]
    return SceneSet(tuple(scenes), role=role)


# -- per-anchor extraction ------------------------------------------------------


def ego_history(scene, t, spec):
    """Ego history over ``[t - history_window, t]`` at the fixed history rate."""
    scene.index_of(t)
    count = int(round(spec.history_window * spec.history_rate)) + 1
    rel = (np.arange(count) - (count - 1)) / spec.history_rate
    if t + rel[0] < scene.start - TIME_TOL:
        raise ValidityError(f"history window at t={t} starts before the scene")
    states = scene.ego_state_at(t + rel)
    pose = scene.ego_state_at([t])[0]
    xy = to_ego_frame(states[:, :2], pose)
    heading = wrap_angle(states[:, 2] - pose[2])
    samples = np.column_stack([rel, xy, heading, states[:, 3]])
    samples[-1, 1:4] = 0.0
    samples.setflags(write=False)
    return EgoHistory(samples)


def future_target(scene, t, spec):
    """Future ego waypoints at ``t + k * spacing`` in the anchor ego frame."""
    scene.index_of(t)
    count = int(round(spec.horizon / spec.spacing))
    if t + spec.horizon > scene.end + TIME_TOL:
        raise ValidityError(f"horizon at t={t} exceeds the scene end {scene.end}")
    times = t + spec.spacing * np.arange(1, count + 1)
    states = scene.ego_state_at(times)
    pose = scene.ego_state_at([t])[0]
    points = to_ego_frame(states[:, :2], pose)
    points.setflags(write=False)
    return Waypoints(points=points, spacing=spec.spacing, horizon=spec.horizon)


def scene_stats(scene_set, f):
    """Mean ego speed and mean displacement between consecutive selected frames."""
    from .subsample import sample_timestamps

    if len(scene_set) == 0:
        raise EmptyInputError("scene set is empty")
    if f > scene_set.native_frequency + TIME_TOL:
        raise FrequencyError(f"f={f} exceeds the native frequency {scene_set.native_frequency}")
    speeds = []
    disp = []
    count = 0
    for scene in scene_set:
        speeds.append(scene.ego_states[:, 3])
        anchors = sample_timestamps(scene.native_timestamps, f)
        idx = np.asarray(anchors.indices)
        xy = scene.ego_states[idx, :2]
        disp.append(np.hypot(*np.diff(xy, axis=0).T))
        count += len(idx)
    disp = np.concatenate(disp)
    return {
        "mean_speed": float(np.mean(np.concatenate(speeds))),
        "displacement_per_frame": float(np.mean(disp)) if len(disp) else 0.0,
        "sample_count": count,
    }


# -- plain-text records ------------------------------------------------------


def write_scene_records(scene, path):
    """Dump a scene as one timestamped state per line (debugging aid)."""

    def num(v):
        return repr(float(v))

    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"scene {scene.scene_id} {num(scene.native_frequency)}\n")
        for t, s in zip(scene.native_timestamps, scene.ego_states):
            fh.write(f"ego {num(t)} {' '.join(map(num, s))}\n")
        for a in scene.agents:
            for i, s in enumerate(a.states):
                t = scene.native_timestamps[a.start_index + i]
                fh.write(f"agent {a.agent_id} {num(t)} {' '.join(map(num, s))}\n")
        for k, line in enumerate(scene.map_polylines):
            for p in line:
                fh.write(f"map {k} {num(p[0])} {num(p[1])}\n")


def read_scene_records(path):
    header = None
    ego_t, ego = [], []
    agents, polys = {}, {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            parts = line.split()
            if not parts:
                continue
            kind = parts[0]
            if kind == "scene":
                header = (parts[1], float(parts[2]))
            elif kind == "ego":
                ego_t.append(float(parts[1]))
                ego.append([float(v) for v in parts[2:6]])
            elif kind == "agent":
                agents.setdefault(int(parts[1]), []).append([float(v) for v in parts[2:7]])
            elif kind == "map":
                polys.setdefault(int(parts[1]), []).append([float(parts[2]), float(parts[3])])
    if header is None:
        raise ConfigurationError(f"{path}: missing scene header")
    scene_id, fn = header
    tracks = []
    for aid, rows in sorted(agents.items()):
        rows = np.asarray(rows)
        start = int(round(rows[0, 0] * fn))
        tracks.append(AgentTrack(agent_id=aid, start_index=start, states=rows[:, 1:]))
    return Scene(
        scene_id=scene_id,
        native_frequency=fn,
        native_timestamps=np.asarray(ego_t),
        ego_states=np.asarray(ego),
        agents=tuple(tracks),
        map_polylines=tuple(np.asarray(v) for _, v in sorted(polys.items())),
    )


def scene_key(scene_id):
    """Stable 32-bit key for a scene id (used to derive per-sample RNG streams)."""
    return zlib.crc32(scene_id.encode("utf-8"))
