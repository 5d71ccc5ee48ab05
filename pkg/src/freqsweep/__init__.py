"""Frequency-sweep laboratory for toy end-to-end trajectory prediction."""

__version__ = "0.1.0"

from .exceptions import (  # noqa: E402
    AnchorError,
    ConfigurationError,
    DivergenceError,
    EmptyDatasetError,
    EmptyInputError,
    FreqSweepError,
    FrequencyError,
    NumericError,
    ShapeError,
    UsageError,
    ValidityError,
)
from .metrics import ade, aggregate_seeds, best_frequency, evaluate, fde  # noqa: E402
from .model import ModelConfig, build_model, param_count  # noqa: E402
from .raster import NoiseConfig, RenderConfig, add_noise, rasterize, temporal_stack  # noqa: E402
from .subsample import (  # noqa: E402
    FrequencyGrid,
    SampleBuilder,
    SampleSpec,
    build_training_set,
    build_validation_set,
    dataset_census,
    filter_valid_anchors,
    sample_timestamps,
)
from .train import TrainConfig, iteration_matched_epochs, train  # noqa: E402
from .world import WorldConfig, ego_history, future_target, generate_scene, generate_scene_set, scene_stats  # noqa: E402
