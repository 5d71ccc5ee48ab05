"""Fixed-protocol minibatch training and the iteration-matched schedule."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import autograd as ag
from .exceptions import ConfigurationError, DivergenceError, EmptyDatasetError, NumericError
from .validation import check_int, check_positive


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 32
    epochs: int = 5
    seed: int = 0
    optimizer: str = "adam"
    shuffle: bool = True
    weight_decay: float = 0.0

    def validate(self):
        check_positive(self.learning_rate, "learning_rate")
        check_int(self.batch_size, "batch_size", minimum=1)
        check_int(self.epochs, "epochs", minimum=1)
        check_positive(self.weight_decay, "weight_decay", strict=False)
        if self.optimizer not in ("adam", "sgd"):
            raise ConfigurationError(f"unknown optimizer {self.optimizer!r}")
        return self


@dataclass
class RunRecord:
    frequency: float
    width: int
    seed: int
    epochs: int
    total_steps: int
    loss_curve: list = field(default_factory=list)
    wall_time: float = 0.0
    checkpoint: str | None = None


def steps_per_epoch(n_samples, batch_size):
    return math.ceil(n_samples / batch_size)


def epoch_order(n, seed, epoch, shuffle=True):
    if not shuffle:
        return np.arange(n)
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & 0xFFFFFFFFFFFFFFFF, epoch, 0x5EED]))
    return rng.permutation(n)


def train(model, dataset, config, checkpoint=None):
    """Minimize the mean MSE over ``dataset``; returns ``(model, RunRecord)``.

    Raises :class:`DivergenceError` carrying the failing step on a non-finite loss.
    """
    config.validate()
    if dataset.role != "train":
        raise ConfigurationError("train() expects a training dataset")
    if len(dataset) == 0:
        raise EmptyDatasetError("training dataset is empty")
    frames, hist, cmd, tgt = dataset.arrays()
    n = len(dataset)
    opt = ag.make_optimizer(config.optimizer, model.parameter_list(), config.learning_rate, config.weight_decay)
    opt.zero_grad()
    curve = []
    step = 0
    start = time.perf_counter()
    for epoch in range(config.epochs):
        order = epoch_order(n, config.seed, epoch, config.shuffle)
        total = 0.0
        for b in range(0, n, config.batch_size):
            idx = order[b : b + config.batch_size]
            try:
                loss = ag.mse_loss(model(frames[idx], hist[idx], cmd[idx]), tgt[idx])
                loss.backward()
                opt.step()
            except NumericError as e:
                raise DivergenceError(step, f"training diverged at step {step}: {e}") from e
            total += float(loss.data) * len(idx)
            step += 1
        curve.append(total / n)
    record = RunRecord(
        frequency=dataset.frequency,
        width=model.config.width,
        seed=config.seed,
        epochs=config.epochs,
        total_steps=step,
        loss_curve=curve,
        wall_time=time.perf_counter() - start,
    )
    if checkpoint is not None:
        ag.save_checkpoint(model.state_dict(), checkpoint)
        record.checkpoint = str(checkpoint)
    return model, record


def iteration_matched_epochs(f_ref, epochs_ref, f_target):
    """Epochs at ``f_target`` matching the volume ``f_ref * epochs_ref``."""
    for name, v in (("f_ref", f_ref), ("epochs_ref", epochs_ref), ("f_target", f_target)):
        check_positive(v, name)
    # round half up; Python's round() would send 2.5 to 2
    return max(1, int(math.floor(f_ref * epochs_ref / f_target + 0.5)))


def delta_ade_percent(ade_low, ade_high):
    """ADE change of the lower-frequency run relative to the higher one, in percent."""
    return 100.0 * (ade_low - ade_high) / ade_high


def format_delta(pct):
    return f"{pct:+.2f}%"


def run_matched_pair(train_scenes, val_set, f_low, f_high, epochs_high, make_model, train_config, builder, spec):
    """Train at ``f_high`` for ``epochs_high`` epochs and at ``f_low`` for the matched count.

    ``make_model`` returns a fresh model; both runs evaluate on ``val_set``.
    """
    from .metrics import evaluate
    from .subsample import build_training_set

    if not f_low < f_high:
        raise ConfigurationError(f"f_low ({f_low}) must be below f_high ({f_high})")
    epochs_low = iteration_matched_epochs(f_high, epochs_high, f_low)
    out = {}
    for label, f, ep in (("low", f_low, epochs_low), ("high", f_high, epochs_high)):
        ds = build_training_set(train_scenes, f, spec, builder)
        cfg = TrainConfig(**{**train_config.__dict__, "epochs": ep})
        model, record = train(make_model(), ds, cfg)
        out[label] = (record, evaluate(model, val_set))
    delta = delta_ade_percent(out["low"][1].ade, out["high"][1].ade)
    return out["low"], out["high"], delta
