import math

import numpy as np
import pytest

from freqsweep.exceptions import ConfigurationError, DivergenceError, EmptyDatasetError
from freqsweep.model import ModelConfig, build_model
from freqsweep.raster import NoiseConfig, RenderConfig
from freqsweep.subsample import FrequencyDataset, FrequencyGrid, SampleBuilder, SampleSpec, build_training_set, build_validation_set
from freqsweep.train import (
    TrainConfig,
    delta_ade_percent,
    format_delta,
    iteration_matched_epochs,
    run_matched_pair,
    steps_per_epoch,
    train,
)
from freqsweep.world import WorldConfig, generate_scene_set

SPEC = SampleSpec()
RENDER = RenderConfig(image_size=31)


@pytest.fixture(scope="module")
def world():
    cfg = WorldConfig(num_scenes=2, scene_duration=8.0, seed=2)
    builder = SampleBuilder(SPEC, RENDER, NoiseConfig(), noise_seed=0)
    scenes = generate_scene_set(cfg, "train")
    val = build_validation_set(generate_scene_set(cfg, "validation", num_scenes=1), FrequencyGrid((2, 5)), SPEC, builder)
    return scenes, val, builder


def make_model(seed=0):
    return build_model(ModelConfig(width=2, image_size=31, history_dim=SPEC.history_dim, seed=seed))


def test_single_step_when_batch_covers_dataset(world):
    scenes, _, builder = world
    ds = build_training_set(scenes, 2.0, SPEC, builder)
    _, rec = train(make_model(), ds, TrainConfig(epochs=1, batch_size=len(ds)))
    assert rec.total_steps == 1
    assert len(rec.loss_curve) == 1


def test_step_arithmetic(world):
    scenes, _, builder = world
    ds = build_training_set(scenes, 5.0, SPEC, builder)
    _, rec = train(make_model(), ds, TrainConfig(epochs=2, batch_size=7))
    assert rec.total_steps == 2 * steps_per_epoch(len(ds), 7) == 2 * math.ceil(len(ds) / 7)


def test_training_is_deterministic(world):
    scenes, _, builder = world
    ds = build_training_set(scenes, 5.0, SPEC, builder)
    cfg = TrainConfig(epochs=2, batch_size=8, seed=4)
    a, ra = train(make_model(1), ds, cfg)
    b, rb = train(make_model(1), ds, cfg)
    assert ra.loss_curve == rb.loss_curve
    sa, sb = a.state_dict(), b.state_dict()
    assert all(np.array_equal(sa[k], sb[k]) for k in sa)
    _, rc = train(make_model(1), ds, TrainConfig(epochs=2, batch_size=8, seed=5))
    assert rc.loss_curve != ra.loss_curve


def test_loss_decreases_on_clean_data():
    cfg = WorldConfig(num_scenes=2, scene_duration=8.0, curvature_range=(0, 0), seed=6)
    builder = SampleBuilder(SPEC, RENDER, NoiseConfig(enabled=False))
    ds = build_training_set(generate_scene_set(cfg, "train"), 10.0, SPEC, builder)
    _, rec = train(make_model(), ds, TrainConfig(epochs=4, batch_size=16, learning_rate=3e-3))
    assert rec.loss_curve[-1] < rec.loss_curve[0]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_reports_step(world):
    scenes, _, builder = world
    ds = build_training_set(scenes, 5.0, SPEC, builder)
    with pytest.raises(DivergenceError) as err:
        train(make_model(), ds, TrainConfig(epochs=3, batch_size=4, learning_rate=1e300, optimizer="sgd"))
    assert err.value.step >= 0


def test_train_rejects_bad_inputs(world):
    scenes, val, builder = world
    with pytest.raises(ConfigurationError):
        train(make_model(), val, TrainConfig())
    with pytest.raises(EmptyDatasetError):
        train(make_model(), FrequencyDataset(frequency=2.0, samples=(), role="train"), TrainConfig())
    with pytest.raises(ConfigurationError):
        TrainConfig(learning_rate=-1.0).validate()
    with pytest.raises(ConfigurationError):
        TrainConfig(optimizer="lbfgs").validate()


def test_checkpoint_written(world, tmp_path):
    scenes, _, builder = world
    ds = build_training_set(scenes, 2.0, SPEC, builder)
    _, rec = train(make_model(), ds, TrainConfig(epochs=1), checkpoint=tmp_path / "m.bin")
    assert rec.checkpoint and (tmp_path / "m.bin").read_bytes()[:4] == b"FSWP"


@pytest.mark.parametrize(
    "f_ref, e_ref, f_target, expected",
    [(12, 5, 6, 10), (10, 8, 8, 10), (12, 10, 10, 12), (20, 12, 15, 16), (20, 5, 10, 10), (10, 5, 6, 8)],
)
def test_matched_epoch_pairs(f_ref, e_ref, f_target, expected):
    assert iteration_matched_epochs(f_ref, e_ref, f_target) == expected


def test_matched_epochs_identity_and_floor():
    for f in (2.0, 7.0, 10.0):
        for e in (1, 3, 12):
            assert iteration_matched_epochs(f, e, f) == e
    assert iteration_matched_epochs(2, 1, 10) == 1
    assert iteration_matched_epochs(10, 1, 4) == 3  # 2.5 rounds half up
    with pytest.raises(ConfigurationError):
        iteration_matched_epochs(0, 5, 2)


def test_delta_sign_convention():
    assert delta_ade_percent(0.9, 1.0) == pytest.approx(-10.0)
    assert format_delta(delta_ade_percent(0.9, 1.0)) == "-10.00%"
    assert format_delta(delta_ade_percent(1.05, 1.0)) == "+5.00%"
    assert format_delta(0.5) == "+0.50%"


def test_run_matched_pair(world):
    scenes, val, builder = world
    low, high, delta = run_matched_pair(scenes, val, 2.0, 5.0, 2, make_model, TrainConfig(batch_size=16), builder, SPEC)
    assert low[0].epochs == iteration_matched_epochs(5.0, 2, 2.0) == 5
    assert high[0].epochs == 2
    assert delta == pytest.approx(delta_ade_percent(low[1].ade, high[1].ade))
    with pytest.raises(ConfigurationError):
        run_matched_pair(scenes, val, 5.0, 2.0, 2, make_model, TrainConfig(), builder, SPEC)
