"""End-to-end acceptance checks, one test per criterion.

Each test records a PASS/FAIL line (see ``conftest.report``) that is
repeated in the pytest terminal summary.
"""

import time
from dataclasses import replace

import numpy as np
import pytest

from conftest import report
from oracles import brute_force_anchors, brute_force_valid_count, kink_aware_gradient_check
from freqsweep import autograd as ag
from freqsweep import experiment
from freqsweep.config import config_from_dict
from freqsweep.metrics import ade, best_frequency, constant_velocity_baseline, evaluate, fde
from freqsweep.model import ModelConfig, build_model
from freqsweep.raster import NoiseConfig, RenderConfig
from freqsweep.subsample import (
    FrequencyGrid,
    SampleBuilder,
    SampleSpec,
    build_training_set,
    build_validation_set,
    dataset_census,
    sample_timestamps,
)
from freqsweep.train import TrainConfig, iteration_matched_epochs, train
from freqsweep.world import WorldConfig, generate_scene_set


def test_c01_subsampling_oracle():
    rng = np.random.default_rng(101)
    start = time.perf_counter()
    mismatches, divisor_cases, bad_gaps = 0, 0, 0
    for case in range(100):
        fn = float(rng.choice([10.0, 12.0, 20.0]))
        n = int(rng.integers(2, 100))
        t0 = float(rng.uniform(0, 50))
        native = t0 + np.arange(n) / fn
        if case % 2:
            k = int(rng.choice([d for d in range(1, 11) if fn % d == 0]))
            f = fn / k
        else:
            f = float(rng.uniform(0.3, fn))
        anchors = sample_timestamps(native, f)
        if list(anchors.indices) != brute_force_anchors(native, f):
            mismatches += 1
        if (fn / f) == round(fn / f):
            divisor_cases += 1
            k = round(fn / f)
            idx_ok = all(b - a == k for a, b in zip(anchors.indices, anchors.indices[1:]))
            # stamps are floats, so the anchor gap equals 1/f to rounding
            t_ok = np.all(np.abs(np.diff(anchors.anchors) - 1.0 / f) <= 1e-12)
            bad_gaps += not (idx_ok and t_ok)
    elapsed = time.perf_counter() - start
    ok = mismatches == 0 and bad_gaps == 0 and divisor_cases >= 40 and elapsed < 1.0
    report(1, "subsampling matches brute force", ok,
           f"mismatches={mismatches} divisor_cases={divisor_cases} bad_gaps={bad_gaps} {elapsed:.2f}s")
    assert ok


def test_c02_window_fixedness():
    start = time.perf_counter()
    cfg = config_from_dict({"world": {"num_scenes": 3}})
    scenes = generate_scene_set(cfg.world, "train")
    spec = cfg.sample_spec
    low = build_training_set(scenes, 2.0, spec, SampleBuilder(spec, cfg.render, cfg.noise, noise_seed=7))
    high = build_training_set(scenes, 10.0, spec, SampleBuilder(spec, cfg.render, cfg.noise, noise_seed=7))
    by_key = {(s.scene_id, s.anchor_t): s.to_bytes() for s in high.samples}
    shared = [s for s in low.samples if (s.scene_id, s.anchor_t) in by_key]
    identical = sum(s.to_bytes() == by_key[(s.scene_id, s.anchor_t)] for s in shared)
    elapsed = time.perf_counter() - start
    ok = len(shared) == len(low) > 0 and identical == len(shared) and elapsed < 10
    report(2, "shared anchors give bit-identical samples", ok, f"{identical}/{len(shared)} identical, {elapsed:.1f}s")
    assert ok


def test_c03_gradient_check():
    rng = np.random.default_rng(303)
    start = time.perf_counter()
    worst, at_h, refined, on_kink, unchecked = 0.0, 0, 0, 0, 0
    for i in range(20):
        cfg = ModelConfig(
            width=int(rng.integers(1, 3)),
            image_size=int(rng.integers(31, 34)),
            channels=int(rng.integers(1, 4)),
            history_dim=4 * int(rng.integers(1, 4)),
            num_waypoints=int(rng.integers(1, 7)),
            seed=i,
        )
        m = build_model(cfg)
        n = 2
        frames = rng.normal(size=(n, cfg.channels, cfg.image_size, cfg.image_size))
        hist = rng.normal(size=(n, cfg.history_dim)) * 5
        cmd = np.eye(3)[rng.integers(0, 3, size=n)]
        target = rng.normal(size=(n, cfg.num_waypoints, 2)) * 10

        def loss():
            return ag.mse_loss(m(frames, hist, cmd), target).data.item()

        m.zero_grad()
        ag.mse_loss(m(frames, hist, cmd), target).backward()
        for p in m.parameter_list():
            w, a, r, k, u = kink_aware_gradient_check(loss, p.data, p.grad, ag, h=1e-3)
            worst, at_h, refined = max(worst, w), at_h + a, refined + r
            on_kink, unchecked = on_kink + k, unchecked + u
    elapsed = time.perf_counter() - start
    ok = worst < 1e-4 and unchecked == 0 and elapsed < 120
    report(3, "reverse mode matches central differences", ok,
           f"max rel err={worst:.2e}; {at_h} entries at h=1e-3, {refined} near a relu kink at smaller h, "
           f"{on_kink} on an exact kink (one-sided), {unchecked} unchecked, {elapsed:.1f}s")
    assert ok


def test_c04_metric_oracle():
    rng = np.random.default_rng(404)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(1000):
        p, g = rng.normal(size=(6, 2)) * 20, rng.normal(size=(6, 2)) * 20
        d = [((p[i, 0] - g[i, 0]) ** 2 + (p[i, 1] - g[i, 1]) ** 2) ** 0.5 for i in range(6)]
        worst = max(worst, abs(ade(p, g) - sum(d) / 6), abs(fde(p, g) - d[-1]))
    triangle = ade([[3.0, 4.0]], [[0.0, 0.0]]) == 5.0 and fde([[3.0, 4.0]], [[0.0, 0.0]]) == 5.0
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-12 and triangle and elapsed < 1.0
    report(4, "ADE/FDE match elementwise oracle", ok, f"max abs diff={worst:.1e}, 3-4-5 exact={triangle}, {elapsed:.2f}s")
    assert ok


def test_c05_iteration_matching():
    start = time.perf_counter()
    pairs = [(12, 5, 6, 10), (10, 8, 8, 10), (12, 10, 10, 12), (20, 12, 15, 16), (20, 5, 10, 10), (10, 5, 6, 8)]
    got = [iteration_matched_epochs(a, b, c) for a, b, c, _ in pairs]
    elapsed = time.perf_counter() - start
    ok = got == [p[3] for p in pairs] and elapsed < 1.0
    report(5, "iteration-matched epochs reproduce the reference pairings", ok, f"got {got}")
    assert ok


def test_c06_best_frequency():
    start = time.perf_counter()
    pave = {2: 0.682, 4: 0.575, 6: 0.551, 8: 0.520, 10: 0.518, 12: 0.516, 15: 0.515, 18: 0.518, 20: 0.518}
    nusc = {2: 1.503, 4: 1.024, 6: 0.924, 8: 0.930, 10: 0.868, 12: 0.855}
    a, b = best_frequency(pave).f_star, best_frequency(nusc).f_star
    elapsed = time.perf_counter() - start
    ok = a == 15 and b == 12 and elapsed < 1.0
    report(6, "best frequency on reference ADE columns", ok, f"column A f*={a:g}, column B f*={b:g}")
    assert ok


def test_c07_training_sanity():
    start = time.perf_counter()
    cfg = config_from_dict({"world": {"curvature_range": [0.0, 0.0]}, "noise": {"enabled": False}})
    spec = cfg.sample_spec
    builder = SampleBuilder(spec, cfg.render, cfg.noise)
    train_set = build_training_set(generate_scene_set(cfg.world, "train"), 10.0, spec, builder)
    val_scenes = generate_scene_set(cfg.world, "validation", num_scenes=cfg.validation_scenes)
    val = build_validation_set(val_scenes, cfg.grid, spec, builder)
    model = build_model(experiment.model_config(cfg, 4, 0))
    model, record = train(model, train_set, replace(cfg.train, epochs=3))
    model_ade = evaluate(model, val).ade
    _, _, _, targets = val.arrays()
    hist = np.stack([s.history.samples for s in val.samples])
    cv_ade = float(np.mean(ade(constant_velocity_baseline(hist, spec.num_waypoints, spec.spacing), targets)))
    elapsed = time.perf_counter() - start
    ok = model_ade < cv_ade and record.loss_curve[-1] < record.loss_curve[0] and elapsed < 180
    report(7, "trained model beats constant velocity on straight clean scenes", ok,
           f"model ADE={model_ade:.3f} m, constant-velocity ADE={cv_ade:.3f} m, {elapsed:.0f}s")
    assert ok


def _repetition_config(r):
    return config_from_dict(
        {
            "world": {"seed": 1000 * r},
            "noise_seed": 1000 * r,
            "seeds": [3 * r, 3 * r + 1, 3 * r + 2],
            "mode": "capacity_sweep",
        }
    )


@pytest.mark.slow
def test_c08_capacity_effect():
    start = time.perf_counter()
    step = 2.0
    grid_max = 10.0
    hits, lines = 0, []
    for r in range(3):
        table = experiment.run_capacity_sweep(_repetition_config(r))
        small = {float(row["frequency_hz"]): float(row["ade_mean"]) for row in table.aggregate if row["width"] == "4"}
        curve = [small[f] for f in sorted(small)]
        fs_small, fs_big = table.f_star[4], table.f_star[16]
        ordered = fs_small <= fs_big + step
        shaped = any(b > a for a, b in zip(curve, curve[1:])) or fs_small < grid_max
        hits += ordered and shaped
        lines.append(f"rep{r}: f*(4)={fs_small:g} f*(16)={fs_big:g} ordered={ordered} shaped={shaped} "
                     "W4 ADE=" + "/".join(f"{v:.3f}" for v in curve))
    elapsed = time.perf_counter() - start
    ok = hits >= 2 and elapsed <= 1800
    report(8, "smaller width peaks no later and below the grid maximum", ok,
           f"{hits}/3 repetitions satisfied both parts, {elapsed / 60:.1f} min; " + "; ".join(lines))
    assert ok


@pytest.mark.slow
def test_c09_determinism(tmp_path):
    start = time.perf_counter()
    cfg = config_from_dict({})
    experiment.run_sweep(cfg, tmp_path / "a")
    experiment.run_sweep(cfg, tmp_path / "b")
    same = {n: (tmp_path / "a" / n).read_bytes() == (tmp_path / "b" / n).read_bytes() for n in ("raw.csv", "aggregate.csv")}
    elapsed = time.perf_counter() - start
    ok = all(same.values()) and elapsed <= 3600
    report(9, "two desk sweeps write byte-identical CSVs", ok, f"{same}, {elapsed / 60:.1f} min")
    assert ok


def test_c10_census():
    rng = np.random.default_rng(1010)
    start = time.perf_counter()
    spec = SampleSpec()
    grid = FrequencyGrid((1, 2, 3, 4, 5, 6, 7, 8, 9, 10))
    monotone, exact = 0, 0
    for _ in range(20):
        wc = WorldConfig(num_scenes=int(rng.integers(1, 4)), scene_duration=float(rng.uniform(3, 15)),
                         seed=int(rng.integers(0, 2**31)))
        scenes = generate_scene_set(wc, "train")
        rows = dataset_census(grid, scenes, spec)
        counts = [n for _, n in rows]
        monotone += counts == sorted(counts)
        exact += all(n == sum(brute_force_valid_count(s, f, spec) for s in scenes) for f, n in rows)
    elapsed = time.perf_counter() - start
    ok = monotone == 20 and exact == 20 and elapsed < 5
    report(10, "census nondecreasing in f and exact", ok, f"monotone {monotone}/20, exact {exact}/20, {elapsed:.2f}s")
    assert ok
