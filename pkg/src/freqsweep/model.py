"""Width-parameterized temporal CNN + MLP waypoint predictor."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import autograd as ag
from .exceptions import ConfigurationError, ShapeError
from .validation import check_int

KERNEL = 3
STRIDE = 2
NUM_COMMANDS = 3
# fixed input/output scaling so raw meters stay O(1) inside the network
POSITION_SCALE = 10.0
SPEED_SCALE = 10.0


def conv_widths(width):
    return (width, 2 * width, 4 * width, 4 * width)


def conv_output_size(size, layers=4):
    for _ in range(layers):
        size = (size - KERNEL) // STRIDE + 1
    return size


@dataclass(frozen=True)
class ModelConfig:
    width: int = 4
    image_size: int = 32
    channels: int = 6
    history_dim: int = 44
    num_waypoints: int = 6
    seed: int = 0

    def validate(self):
        check_int(self.width, "width", minimum=1)
        check_int(self.num_waypoints, "num_waypoints", minimum=1)
        check_int(self.channels, "channels", minimum=1)
        check_int(self.history_dim, "history_dim", minimum=0)
        size = self.image_size
        for _ in range(4):
            if size < KERNEL:
                raise ConfigurationError(f"image_size {self.image_size} too small for the conv stack")
            size = (size - KERNEL) // STRIDE + 1
        return self


def layer_shapes(config):
    """Ordered ``name -> shape`` of every parameter tensor."""
    w = config.width
    shapes = {}
    c_in = config.channels
    for i, c_out in enumerate(conv_widths(w)):
        shapes[f"conv{i}.weight"] = (c_out, c_in, KERNEL, KERNEL)
        shapes[f"conv{i}.bias"] = (c_out,)
        c_in = c_out
    side = conv_output_size(config.image_size)
    cnn_features = c_in * side * side
    mlp_in = config.history_dim + NUM_COMMANDS
    shapes["mlp0.weight"] = (2 * w, mlp_in)
    shapes["mlp0.bias"] = (2 * w,)
    shapes["mlp1.weight"] = (2 * w, 2 * w)
    shapes["mlp1.bias"] = (2 * w,)
    shapes["fuse.weight"] = (4 * w, cnn_features + 2 * w)
    shapes["fuse.bias"] = (4 * w,)
    shapes["head.weight"] = (2 * config.num_waypoints, 4 * w)
    shapes["head.bias"] = (2 * config.num_waypoints,)
    return shapes


def scale_history(hist):
    """Scale flattened ``(x, y, heading, speed)`` history features."""
    h = np.asarray(hist, dtype=np.float64).reshape(len(hist), -1, 4)
    scale = np.array([POSITION_SCALE, POSITION_SCALE, 1.0, SPEED_SCALE])
    return (h / scale).reshape(len(hist), -1)


class ToyPredictor:
    def __init__(self, config, parameters):
        self.config = config
        self.parameters = parameters

    def named_parameters(self):
        return dict(self.parameters)

    def parameter_list(self):
        return list(self.parameters.values())

    def zero_grad(self):
        for p in self.parameters.values():
            p.zero_grad()

    def state_dict(self):
        return {k: p.data.copy() for k, p in self.parameters.items()}

    def load_state_dict(self, state):
        for k, p in self.parameters.items():
            if state[k].shape != p.shape:
                raise ShapeError(f"{k}: checkpoint shape {state[k].shape} != {p.shape}")
            p.data[...] = state[k]

    def forward(self, frames, history, command):
        """Predict ``(batch, num_waypoints, 2)`` ego-frame waypoints in meters."""
        cfg = self.config
        frames = np.asarray(frames, dtype=np.float64)
        history = np.asarray(history, dtype=np.float64)
        command = np.asarray(command, dtype=np.float64)
        if frames.ndim == 3:
            frames, history, command = frames[None], history[None], command[None]
        n = frames.shape[0]
        if frames.shape[1:] != (cfg.channels, cfg.image_size, cfg.image_size):
            raise ShapeError(f"frames shape {frames.shape} does not match the model config")
        if history.shape != (n, cfg.history_dim) or command.shape != (n, NUM_COMMANDS):
            raise ShapeError(f"history {history.shape} / command {command.shape} do not match the model config")
        p = self.parameters
        x = ag.Tensor(frames)
        for i in range(4):
            x = ag.relu(ag.conv2d(x, p[f"conv{i}.weight"], p[f"conv{i}.bias"], stride=STRIDE))
        x = ag.flatten(x)
        h = ag.Tensor(np.concatenate([scale_history(history), command], axis=1))
        h = ag.relu(ag.affine(h, p["mlp0.weight"], p["mlp0.bias"]))
        h = ag.relu(ag.affine(h, p["mlp1.weight"], p["mlp1.bias"]))
        z = ag.relu(ag.affine(ag.concat([x, h], axis=1), p["fuse.weight"], p["fuse.bias"]))
        out = ag.affine(z, p["head.weight"], p["head.bias"])
        return ag.mul(ag.reshape(out, (n, cfg.num_waypoints, 2)), POSITION_SCALE)

    __call__ = forward

    def predict(self, frames, history, command, batch_size=256):
        outs = []
        for i in range(0, len(frames), batch_size):
            sl = slice(i, i + batch_size)
            outs.append(self.forward(frames[sl], history[sl], command[sl]).data)
        return np.concatenate(outs) if outs else np.zeros((0, self.config.num_waypoints, 2))


def build_model(config):
    """Fresh model with uniform +-sqrt(6 / fan_in) weights and zero biases."""
    config.validate()
    rng = np.random.default_rng(np.random.SeedSequence([int(config.seed) & 0xFFFFFFFFFFFFFFFF, 0x70C]))
    params = {}
    for name, shape in layer_shapes(config).items():
        if name.endswith(".bias"):
            data = np.zeros(shape)
        else:
            fan_in = int(np.prod(shape[1:]))
            bound = math.sqrt(6.0 / fan_in)
            data = rng.uniform(-bound, bound, size=shape)
        params[name] = ag.Parameter(data, name=name)
    return ToyPredictor(config, params)


def param_count(model):
    return int(sum(p.size for p in model.parameters.values()))


def expected_param_count(config):
    """Closed-form parameter count of the reference architecture."""
    w, k = config.width, KERNEL
    widths = conv_widths(w)
    total = 0
    c_in = config.channels
    for c_out in widths:
        total += c_out * c_in * k * k + c_out
        c_in = c_out
    side = conv_output_size(config.image_size)
    total += 2 * w * (config.history_dim + NUM_COMMANDS) + 2 * w
    total += 2 * w * 2 * w + 2 * w
    total += 4 * w * (widths[-1] * side * side + 2 * w) + 4 * w
    total += 2 * config.num_waypoints * 4 * w + 2 * config.num_waypoints
    return total


def config_dict(config):
    return asdict(config)
