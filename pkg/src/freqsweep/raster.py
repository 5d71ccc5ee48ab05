"""Ego-centric BEV rasterization and render-space noise."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import ConfigurationError, ValidityError
from .validation import check_int, check_positive
from .world import TIME_TOL, to_ego_frame

CHANNELS = ("map", "agents", "ego")


@dataclass(frozen=True)
class RenderConfig:
    image_size: int = 32
    meters_per_pixel: float = 1.0
    channels: tuple = CHANNELS
    ego_anchor_pixel: tuple | None = None

    def __post_init__(self):
        check_int(self.image_size, "image_size", minimum=1)
        check_positive(self.meters_per_pixel, "meters_per_pixel")
        if not set(self.channels) <= set(CHANNELS) or not self.channels:
            raise ConfigurationError(f"channels must be a subset of {CHANNELS}")
        object.__setattr__(self, "channels", tuple(self.channels))
        if self.ego_anchor_pixel is None:
            # ego sits in the lower part of the image so most of it looks ahead
            object.__setattr__(self, "ego_anchor_pixel", ((3 * self.image_size) // 4, self.image_size // 2))
        else:
            object.__setattr__(self, "ego_anchor_pixel", tuple(int(v) for v in self.ego_anchor_pixel))

    @property
    def num_channels(self):
        return len(self.channels)


@dataclass(frozen=True)
class NoiseConfig:
    background_sigma: float = 0.5
    jitter_max: int = 2
    enabled: bool = True

    def __post_init__(self):
        check_positive(self.background_sigma, "background_sigma", strict=False)
        check_int(self.jitter_max, "jitter_max", minimum=0)


@dataclass(frozen=True)
class BevImage:
    data: np.ndarray
    anchor_t: float


def _ego_to_pixel(xy, config):
    """Continuous pixel coordinates ``(row, col)`` of ego-frame points."""
    r0, c0 = config.ego_anchor_pixel
    mpp = config.meters_per_pixel
    return r0 - xy[..., 0] / mpp, c0 - xy[..., 1] / mpp


def _pixel_centers(config):
    n = config.image_size
    r0, c0 = config.ego_anchor_pixel
    rows, cols = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    mpp = config.meters_per_pixel
    return (r0 - rows) * mpp, (c0 - cols) * mpp


def _draw_polyline(plane, pts, config):
    if len(pts) < 2:
        return
    n = plane.shape[0]
    r, c = _ego_to_pixel(pts, config)
    # drop segments whose bounding box misses the image
    seg_keep = (
        (np.maximum(r[:-1], r[1:]) > -1)
        & (np.minimum(r[:-1], r[1:]) < n)
        & (np.maximum(c[:-1], c[1:]) > -1)
        & (np.minimum(c[:-1], c[1:]) < n)
    )
    if not seg_keep.any():
        return
    start = np.stack([r[:-1], c[:-1]], axis=1)[seg_keep]
    delta = np.stack([r[1:] - r[:-1], c[1:] - c[:-1]], axis=1)[seg_keep]
    steps = np.maximum(1, np.ceil(4.0 * np.hypot(delta[:, 0], delta[:, 1])).astype(np.int64))
    seg_idx = np.repeat(np.arange(len(steps)), steps + 1)
    offsets = np.arange(len(seg_idx)) - np.repeat(np.cumsum(steps + 1) - (steps + 1), steps + 1)
    u = (offsets / steps[seg_idx])[:, None]
    dense = start[seg_idx] + u * delta[seg_idx]
    rr = np.floor(dense[:, 0] + 0.5).astype(np.int64)
    cc = np.floor(dense[:, 1] + 0.5).astype(np.int64)
    inside = (rr >= 0) & (rr < n) & (cc >= 0) & (cc < n)
    plane[rr[inside], cc[inside]] = 1.0


def _draw_boxes(plane, boxes, px, py, config):
    """Fill pixels whose centers lie inside oriented boxes ``(x, y, h, length, width)``."""
    for x, y, h, length, width in boxes:
        c, s = math.cos(h), math.sin(h)
        dx, dy = px - x, py - y
        along = c * dx + s * dy
        across = -s * dx + c * dy
        inside = (np.abs(along) <= 0.5 * length + 1e-9) & (np.abs(across) <= 0.5 * width + 1e-9)
        plane[inside] = 1.0


def rasterize(scene, t, config, frame_t=None):
    """Render the scene at ``frame_t`` (default ``t``) in the ego frame at ``t``."""
    scene.index_of(t)
    frame_t = t if frame_t is None else frame_t
    if not scene.contains(frame_t):
        raise ValidityError(f"frame time {frame_t} outside scene span")
    pose = scene.ego_state_at([t])[0]
    n = config.image_size
    data = np.zeros((config.num_channels, n, n))
    px, py = _pixel_centers(config)
    for ci, name in enumerate(config.channels):
        plane = data[ci]
        if name == "map":
            for line in scene.map_polylines:
                _draw_polyline(plane, to_ego_frame(line, pose), config)
        elif name == "agents":
            states = scene.agent_states_at(frame_t)
            if len(states):
                xy = to_ego_frame(states[:, :2], pose)
                boxes = np.column_stack([xy, states[:, 2] - pose[2], states[:, 3:5]])
                _draw_boxes(plane, boxes, px, py, config)
        elif name == "ego":
            ego = scene.ego_state_at([frame_t])[0]
            xy = to_ego_frame(ego[None, :2], pose)[0]
            box = [(xy[0], xy[1], ego[2] - pose[2], scene.ego_length, scene.ego_width)]
            _draw_boxes(plane, box, px, py, config)
    return BevImage(data=data, anchor_t=t)


def _shift(data, dr, dc):
    """Translate the last two axes by integer offsets with zero fill."""
    out = np.zeros_like(data)
    n_r, n_c = data.shape[-2:]
    src_r = slice(max(0, -dr), min(n_r, n_r - dr))
    dst_r = slice(max(0, dr), min(n_r, n_r + dr))
    src_c = slice(max(0, -dc), min(n_c, n_c - dc))
    dst_c = slice(max(0, dc), min(n_c, n_c + dc))
    out[..., dst_r, dst_c] = data[..., src_r, src_c]
    return out


def draw_jitter(noise, rng):
    if not noise.enabled or noise.jitter_max == 0:
        return 0, 0
    dr, dc = rng.integers(-noise.jitter_max, noise.jitter_max + 1, size=2)
    return int(dr), int(dc)


def add_noise(image, noise, rng, jitter=None):
    """Return a noised copy: global integer jitter, then i.i.d. Gaussian background noise."""
    data = np.array(image.data, dtype=np.float64, copy=True)
    if not noise.enabled:
        return BevImage(data=data, anchor_t=image.anchor_t)
    dr, dc = draw_jitter(noise, rng) if jitter is None else jitter
    if dr or dc:
        data = _shift(data, dr, dc)
    if noise.background_sigma > 0:
        data = data + rng.normal(0.0, noise.background_sigma, size=data.shape)
    return BevImage(data=data, anchor_t=image.anchor_t)


def temporal_stack(scene, t, spec, render, noise, rng):
    """Rasterize and noise one frame per offset, stacked along channels.

    All frames share one jitter draw; background noise is drawn per frame.
    """
    scene.index_of(t)
    for off in spec.bev_frame_offsets:
        if not scene.contains(t + off):
            raise ValidityError(f"BEV frame offset {off} at t={t} leaves the scene span")
    jitter = draw_jitter(noise, rng)
    frames = []
    for off in spec.bev_frame_offsets:
        clean = rasterize(scene, t, render, frame_t=t + off)
        frames.append(add_noise(clean, noise, rng, jitter=jitter).data)
    return BevImage(data=np.concatenate(frames, axis=0), anchor_t=t)


def to_graymap(image, channel=0):
    """Plain-text graymap (PGM P2) of one channel, for debugging."""
    plane = np.clip(image.data[channel], 0.0, 1.0)
    levels = np.rint(plane * 255).astype(int)
    lines = ["P2", f"{levels.shape[1]} {levels.shape[0]}", "255"]
    lines += [" ".join(str(v) for v in row) for row in levels]
    return "\n".join(lines) + "\n"
