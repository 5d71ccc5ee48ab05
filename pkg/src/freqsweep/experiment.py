"""Sweep orchestration: frequency sweeps, capacity sweeps, matched pairs, census.

Every emitted CSV/JSON byte is a function of the configuration. Wall-clock
times are written only when ``record_time=True`` (the ``--timing`` flag).
"""

from __future__ import annotations

import csv
import io
import logging
import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path

from .config import manifest_json
from .exceptions import ConfigurationError, DivergenceError, FreqSweepError
from .metrics import FrequencyStats, best_frequency, evaluate, mean_std
from .model import ModelConfig, build_model
from .plot import emit_plot, response_series
from .subsample import SampleBuilder, build_training_set, build_validation_set, dataset_census
from .train import (
    delta_ade_percent,
    format_delta,
    iteration_matched_epochs,
    train,
)
from .world import generate_scene_set

log = logging.getLogger(__name__)

CSV_VERSION = "1"
RAW_HEADER = ("mode", "frequency_hz", "width", "seed", "epochs", "total_steps", "ade_m", "fde_m", "wall_time_s")
AGG_HEADER = ("frequency_hz", "width", "ade_mean", "ade_std", "fde_mean", "fde_std", "f_star_flag")
FSTAR_HEADER = ("width", "f_star_hz")
CENSUS_HEADER = ("frequency_hz", "sample_count")
PAIR_HEADER = ("low_config", "low_ade_m", "low_fde_m", "high_config", "high_ade_m", "high_fde_m", "delta_ade")


def fmt(v):
    """Shortest round-trip float text, so aggregates recompute exactly from CSV."""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def fmt_hz(f):
    return f"{f:g}"


@dataclass
class ResultsTable:
    raw: list = field(default_factory=list)
    aggregate: list = field(default_factory=list)
    excluded: list = field(default_factory=list)
    f_star: dict = field(default_factory=dict)


# -- data preparation -----------------------------------------------------------


@dataclass
class Workspace:
    """Scenes, shared validation set and per-frequency training sets."""

    config: object
    builder: SampleBuilder
    train_scenes: object
    val_set: object
    train_sets: dict


def prepare(config, frequencies=None):
    cfg = config
    builder = SampleBuilder(cfg.sample_spec, cfg.render, cfg.noise, noise_seed=cfg.noise_seed)
    train_scenes = generate_scene_set(cfg.world, "train")
    val_scenes = generate_scene_set(cfg.world, "validation", num_scenes=cfg.validation_scenes)
    val_set = build_validation_set(val_scenes, cfg.grid, cfg.sample_spec, builder)
    freqs = cfg.grid.frequencies if frequencies is None else frequencies
    train_sets = {f: build_training_set(train_scenes, f, cfg.sample_spec, builder) for f in freqs}
    return Workspace(cfg, builder, train_scenes, val_set, train_sets)


def model_config(config, width, seed):
    spec = config.sample_spec
    return ModelConfig(
        width=width,
        image_size=config.render.image_size,
        channels=config.render.num_channels * len(spec.bev_frame_offsets),
        history_dim=spec.history_dim,
        num_waypoints=spec.num_waypoints,
        seed=seed,
    )


# -- single runs ----------------------------------------------------------------

_WORKSPACE = None


def _run_one(job):
    """Train one ``(frequency, width, seed, epochs)`` job on the module workspace."""
    f, width, seed, epochs = job
    ws = _WORKSPACE
    cfg = ws.config
    model = build_model(model_config(cfg, width, seed))
    tcfg = replace(cfg.train, seed=seed, epochs=epochs)
    try:
        model, record = train(model, ws.train_sets[f], tcfg)
    except DivergenceError as e:
        return {"job": job, "diverged": True, "step": e.step}
    metric = evaluate(model, ws.val_set)
    return {
        "job": job,
        "diverged": False,
        "total_steps": record.total_steps,
        "ade": metric.ade,
        "fde": metric.fde,
        "wall_time": record.wall_time,
        "loss_curve": record.loss_curve,
    }


def run_jobs(ws, jobs, threads=1):
    """Run jobs, in a forked worker pool when ``threads > 1``; results keep job order."""
    global _WORKSPACE
    _WORKSPACE = ws
    try:
        if threads > 1 and len(jobs) > 1 and "fork" in multiprocessing.get_all_start_methods():
            ctx = multiprocessing.get_context("fork")
            with ProcessPoolExecutor(max_workers=threads, mp_context=ctx) as pool:
                return list(pool.map(_run_one, jobs))
        return [_run_one(j) for j in jobs]
    finally:
        _WORKSPACE = None


# -- tables -----------------------------------------------------------------------


def raw_rows(mode, results, record_time=False):
    rows = []
    for r in results:
        if r["diverged"]:
            continue
        f, width, seed, epochs = r["job"]
        rows.append(
            {
                "mode": mode,
                "frequency_hz": fmt_hz(f),
                "width": str(width),
                "seed": str(seed),
                "epochs": str(epochs),
                "total_steps": str(r["total_steps"]),
                "ade_m": fmt(float(r["ade"])),
                "fde_m": fmt(float(r["fde"])),
                "wall_time_s": f"{r['wall_time']:.3f}" if record_time else "",
            }
        )
    rows.sort(key=lambda r: (int(r["width"]), float(r["frequency_hz"]), int(r["seed"])))
    return rows


def aggregate_rows(raw):
    """Aggregate raw rows per ``(width, frequency)`` and flag each width's best frequency."""
    groups = {}
    for r in raw:
        groups.setdefault((int(r["width"]), float(r["frequency_hz"])), []).append(r)
    stats = {}
    for key, rows in groups.items():
        a_mean, a_std = mean_std([float(r["ade_m"]) for r in rows])
        f_mean, f_std = mean_std([float(r["fde_m"]) for r in rows])
        stats[key] = FrequencyStats(a_mean, a_std, f_mean, f_std)
    f_star = {}
    for width in sorted({w for w, _ in stats}):
        entries = {f: s for (w, f), s in stats.items() if w == width}
        f_star[width] = best_frequency(entries).f_star
    out = []
    for (width, f) in sorted(stats):
        s = stats[(width, f)]
        out.append(
            {
                "frequency_hz": fmt_hz(f),
                "width": str(width),
                "ade_mean": fmt(s.ade_mean),
                "ade_std": fmt(s.ade_std),
                "fde_mean": fmt(s.fde_mean),
                "fde_std": fmt(s.fde_std),
                "f_star_flag": "1" if f == f_star[width] else "0",
            }
        )
    return out, f_star


def csv_text(header, rows):
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=header, lineterminator="\n")
    w.writeheader()
    for r in rows:
        w.writerow(r)
    return buf.getvalue()


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        return list(csv.DictReader(fh))


def _write(out_dir, name, text):
    path = Path(out_dir) / name
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as e:
        raise FreqSweepError(f"cannot write {path}: {e}") from None
    return path


# -- modes ------------------------------------------------------------------------


def _sweep_tables(config, widths, threads, record_time, mode, ws=None):
    ws = ws if ws is not None else prepare(config)
    jobs = [(f, w, s, config.train.epochs) for w in widths for f in config.grid for s in config.seeds]
    results = run_jobs(ws, jobs, threads)
    table = ResultsTable()
    table.raw = raw_rows(mode, results, record_time)
    table.excluded = [
        {"frequency_hz": r["job"][0], "width": r["job"][1], "seed": r["job"][2], "diverged_at_step": r["step"]}
        for r in results
        if r["diverged"]
    ]
    for r in table.excluded:
        log.warning("run excluded after divergence: %s", r)
    if not table.raw:
        raise FreqSweepError("every run diverged")
    table.aggregate, table.f_star = aggregate_rows(table.raw)
    return table, ws


def _emit_common(config, table, out_dir, mode, extra=None):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    _write(out, "raw.csv", csv_text(RAW_HEADER, table.raw))
    _write(out, "aggregate.csv", csv_text(AGG_HEADER, table.aggregate))
    emit_plot(response_series(table.aggregate), out / "response.svg", title="validation ADE vs training frequency")
    meta = {"mode": mode, "csv_version": CSV_VERSION, "excluded_runs": table.excluded}
    meta["f_star"] = {str(w): f for w, f in sorted(table.f_star.items())}
    if extra:
        meta.update(extra)
    _write(out, "manifest.json", manifest_json(config, meta))


def run_sweep(config, out_dir=None, threads=1, record_time=False, width=None, ws=None):
    """One frequency sweep at a fixed width (``width`` or the first configured width)."""
    config.validate()
    width = config.widths[0] if width is None else width
    table, _ = _sweep_tables(config, [width], threads, record_time, "sweep", ws)
    if out_dir is not None:
        _emit_common(config, table, out_dir, "sweep")
    return table


def run_capacity_sweep(config, out_dir=None, threads=1, record_time=False, ws=None):
    config.validate()
    table, _ = _sweep_tables(config, list(config.widths), threads, record_time, "capacity_sweep", ws)
    if out_dir is not None:
        out = Path(out_dir)
        _emit_common(config, table, out, "capacity_sweep")
        rows = [{"width": str(w), "f_star_hz": fmt_hz(f)} for w, f in sorted(table.f_star.items())]
        _write(out, "fstar.csv", csv_text(FSTAR_HEADER, rows))
        emit_plot(
            [{"label": "f*", "x": [float(w) for w in sorted(table.f_star)],
              "y": [table.f_star[w] for w in sorted(table.f_star)]}],
            out / "fstar.svg",
            x_label="width W",
            y_label="best frequency f* (Hz)",
        )
    return table


def pair_label(f, epochs):
    return f"{fmt_hz(f)} Hz x {epochs} ep"


def run_matched_pair(config, out_dir=None, threads=1, record_time=False, ws=None):
    """Iteration-matched pair at the first width, averaged over seeds."""
    config.validate()
    mp = config.matched_pair
    if not mp.f_low < mp.f_high:
        raise ConfigurationError("matched_pair.f_low must be below f_high")
    for f in (mp.f_low, mp.f_high):
        if f not in config.grid.frequencies:
            raise ConfigurationError(f"matched-pair frequency {f} is not in the grid")
    epochs_low = iteration_matched_epochs(mp.f_high, mp.epochs_high, mp.f_low)
    ws = ws if ws is not None else prepare(config, frequencies=(mp.f_low, mp.f_high))
    width = config.widths[0]
    jobs = [(mp.f_low, width, s, epochs_low) for s in config.seeds]
    jobs += [(mp.f_high, width, s, mp.epochs_high) for s in config.seeds]
    results = run_jobs(ws, jobs, threads)
    table = ResultsTable()
    table.raw = raw_rows("matched_pair", results, record_time)
    table.excluded = [{"job": list(r["job"]), "diverged_at_step": r["step"]} for r in results if r["diverged"]]
    means = {}
    for label, f, ep in (("low", mp.f_low, epochs_low), ("high", mp.f_high, mp.epochs_high)):
        rows = [r for r in table.raw if float(r["frequency_hz"]) == f]
        if not rows:
            raise FreqSweepError(f"all runs at {f} Hz diverged")
        means[label] = (
            pair_label(f, ep),
            mean_std([float(r["ade_m"]) for r in rows])[0],
            mean_std([float(r["fde_m"]) for r in rows])[0],
        )
    delta = delta_ade_percent(means["low"][1], means["high"][1])
    row = {
        "low_config": means["low"][0],
        "low_ade_m": fmt(means["low"][1]),
        "low_fde_m": fmt(means["low"][2]),
        "high_config": means["high"][0],
        "high_ade_m": fmt(means["high"][1]),
        "high_fde_m": fmt(means["high"][2]),
        "delta_ade": format_delta(delta),
    }
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write(out, "raw.csv", csv_text(RAW_HEADER, table.raw))
        _write(out, "matched_pair.csv", csv_text(PAIR_HEADER, [row]))
        _write(out, "manifest.json", manifest_json(config, {"mode": "matched_pair", "excluded_runs": table.excluded}))
    return row, table


def run_census(config, out_dir=None):
    config.validate()
    scenes = generate_scene_set(config.world, "train")
    rows = dataset_census(config.grid, scenes, config.sample_spec)
    table = [{"frequency_hz": fmt_hz(f), "sample_count": str(n)} for f, n in rows]
    if out_dir is not None:
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        _write(out, "census.csv", csv_text(CENSUS_HEADER, table))
    return rows


def plot_aggregate(aggregate_csv, svg_path):
    rows = read_csv(aggregate_csv)
    return emit_plot(response_series(rows), svg_path, title="validation ADE vs training frequency")


def default_threads():
    return max(1, min(os.cpu_count() or 1, 8))
