"""scikit-learn compatible wrappers around the pipeline pieces."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .metrics import ade, fde
from .model import NUM_COMMANDS, ModelConfig, build_model
from .subsample import sample_timestamps, stack_samples
from .train import TrainConfig, train


class TemporalSubsampler(TransformerMixin, BaseEstimator):
    """Map a native timestamp sequence to the anchor times selected at ``frequency``."""

    def __init__(self, frequency=10.0):
        self.frequency = frequency

    def fit(self, X, y=None):
        return self

    def transform(self, X):
        native = np.asarray(X, dtype=np.float64).ravel()
        return np.asarray(sample_timestamps(native, self.frequency).anchors)


class SampleVectorizer(TransformerMixin, BaseEstimator):
    """Flatten TrainingSamples into rows ``[frames | history | command one-hot]``."""

    def fit(self, X, y=None):
        frames, hist, _, _ = stack_samples(list(X))
        self.frame_shape_ = frames.shape[1:]
        self.history_dim_ = hist.shape[1]
        self.n_features_in_ = int(np.prod(self.frame_shape_)) + self.history_dim_ + NUM_COMMANDS
        return self

    def transform(self, X):
        check_is_fitted(self, "frame_shape_")
        frames, hist, cmd, _ = stack_samples(list(X))
        return np.concatenate([frames.reshape(len(frames), -1), hist, cmd], axis=1)


def targets_matrix(samples):
    """``(n, 2 * num_waypoints)`` targets matching :class:`ToyTrajectoryRegressor`."""
    return np.stack([s.target.points.reshape(-1) for s in samples])


class _ArrayDataset:
    role = "train"
    frequency = float("nan")

    def __init__(self, arrays):
        self._arrays = arrays

    def __len__(self):
        return len(self._arrays[0])

    def arrays(self):
        return self._arrays


class ToyTrajectoryRegressor(RegressorMixin, BaseEstimator):
    """Temporal CNN + MLP waypoint regressor with a fit/predict interface.

    ``X`` rows follow :class:`SampleVectorizer`; ``y`` rows are flattened
    ``(x, y)`` waypoints in meters.
    """

    def __init__(
        self,
        width=4,
        image_size=32,
        channels=6,
        history_dim=44,
        learning_rate=3e-3,
        batch_size=16,
        epochs=5,
        optimizer="adam",
        seed=0,
        shuffle=True,
    ):
        self.width = width
        self.image_size = image_size
        self.channels = channels
        self.history_dim = history_dim
        self.learning_rate = learning_rate
        self.batch_size = batch_size
        self.epochs = epochs
        self.optimizer = optimizer
        self.seed = seed
        self.shuffle = shuffle

    def _split(self, X):
        X = check_array(X, dtype=np.float64)
        n_frame = self.channels * self.image_size**2
        expected = n_frame + self.history_dim + NUM_COMMANDS
        if X.shape[1] != expected:
            raise ValueError(f"X has {X.shape[1]} features, expected {expected}")
        frames = X[:, :n_frame].reshape(-1, self.channels, self.image_size, self.image_size)
        hist = X[:, n_frame : n_frame + self.history_dim]
        cmd = X[:, n_frame + self.history_dim :]
        return frames, hist, cmd

    def fit(self, X, y):
        frames, hist, cmd = self._split(X)
        y = check_array(y, dtype=np.float64, allow_nd=True)
        y = y.reshape(len(y), -1, 2)
        if len(y) != len(frames):
            raise ValueError("X and y have different lengths")
        cfg = ModelConfig(
            width=self.width,
            image_size=self.image_size,
            channels=self.channels,
            history_dim=self.history_dim,
            num_waypoints=y.shape[1],
            seed=self.seed,
        )
        tcfg = TrainConfig(
            learning_rate=self.learning_rate,
            batch_size=self.batch_size,
            epochs=self.epochs,
            seed=self.seed,
            optimizer=self.optimizer,
            shuffle=self.shuffle,
        )
        self.model_, self.record_ = train(build_model(cfg), _ArrayDataset((frames, hist, cmd, y)), tcfg)
        self.n_features_in_ = X.shape[1] if hasattr(X, "shape") else len(X[0])
        return self

    def predict_waypoints(self, X):
        check_is_fitted(self, "model_")
        frames, hist, cmd = self._split(X)
        return self.model_.predict(frames, hist, cmd)

    def predict(self, X):
        w = self.predict_waypoints(X)
        return w.reshape(len(w), -1)

    def ade_fde(self, X, y):
        pred = self.predict_waypoints(X)
        gt = np.asarray(y, dtype=np.float64).reshape(pred.shape)
        return float(np.mean(ade(pred, gt))), float(np.mean(fde(pred, gt)))
