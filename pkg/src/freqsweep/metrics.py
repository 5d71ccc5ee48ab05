"""ADE/FDE metrics, seed aggregation and best-frequency selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigurationError, EmptyInputError, ShapeError


@dataclass(frozen=True)
class MetricResult:
    ade: float
    fde: float
    sample_count: int


@dataclass(frozen=True)
class FrequencyStats:
    ade_mean: float
    ade_std: float
    fde_mean: float
    fde_std: float
    ade_values: tuple = ()
    fde_values: tuple = ()


@dataclass
class FrequencyResponse:
    entries: dict = field(default_factory=dict)

    @property
    def frequencies(self):
        return sorted(self.entries)


@dataclass(frozen=True)
class BestFrequency:
    f_star: float
    criterion: str = "ade_mean"


def _points(w):
    return np.asarray(getattr(w, "points", w), dtype=np.float64)


def _distances(pred, gt):
    p, g = _points(pred), _points(gt)
    if p.shape != g.shape or p.shape[-1] != 2:
        raise ShapeError(f"waypoint shapes {p.shape} and {g.shape} do not match")
    return np.sqrt(np.sum((p - g) ** 2, axis=-1))


def ade(pred, gt):
    """Mean Euclidean waypoint error. Batched inputs give one value per sample."""
    return np.mean(_distances(pred, gt), axis=-1)


def fde(pred, gt):
    return _distances(pred, gt)[..., -1]


def evaluate(model, valset, batch_size=256):
    if len(valset) == 0:
        raise EmptyInputError("validation set is empty")
    frames, hist, cmd, tgt = valset.arrays()
    pred = model.predict(frames, hist, cmd, batch_size=batch_size)
    per_ade = ade(pred, tgt)
    per_fde = fde(pred, tgt)
    return MetricResult(ade=float(np.mean(per_ade)), fde=float(np.mean(per_fde)), sample_count=len(valset))


def mean_std(values):
    """Arithmetic mean and population standard deviation."""
    v = np.asarray(values, dtype=np.float64)
    if v.size == 0:
        raise EmptyInputError("no values to aggregate")
    if v.size == 1:
        return float(v[0]), 0.0
    return float(np.mean(v)), float(np.std(v))


def aggregate_seeds(results):
    if not results:
        raise EmptyInputError("no seed results to aggregate")
    a_mean, a_std = mean_std([r.ade for r in results])
    f_mean, f_std = mean_std([r.fde for r in results])
    return FrequencyStats(
        ade_mean=a_mean,
        ade_std=a_std,
        fde_mean=f_mean,
        fde_std=f_std,
        ade_values=tuple(r.ade for r in results),
        fde_values=tuple(r.fde for r in results),
    )


def response_from_results(per_frequency):
    """``{f: [MetricResult, ...]}`` to a :class:`FrequencyResponse`."""
    return FrequencyResponse({float(f): aggregate_seeds(rs) for f, rs in per_frequency.items()})


def best_frequency(response, grid=None):
    """Frequency with the smallest ``ade_mean``; exact ties go to the lowest one."""
    entries = response.entries if isinstance(response, FrequencyResponse) else response
    if not entries:
        raise EmptyInputError("empty frequency response")
    if grid is not None:
        missing = [f for f in grid if f not in entries]
        if missing:
            raise ConfigurationError(f"response is missing frequencies {missing}")
    best_f, best_v = None, math.inf
    for f in sorted(entries):
        e = entries[f]
        v = e.ade_mean if isinstance(e, FrequencyStats) else float(e)
        if v < best_v:
            best_f, best_v = f, v
    return BestFrequency(f_star=best_f)


def constant_velocity_baseline(history_samples, num_waypoints, spacing):
    """Extrapolate straight ahead at the current speed (ego frame, heading 0)."""
    hist = np.asarray(history_samples)
    speed = hist[..., -1, 4]
    steps = spacing * np.arange(1, num_waypoints + 1)
    xs = speed[..., None] * steps
    return np.stack([xs, np.zeros_like(xs)], axis=-1)
