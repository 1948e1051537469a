from .io import apply_parameters, load_parameters, save_parameters
from .network import (
    BuildError,
    LayerInstance,
    Network,
    ShapeError,
    TrainHistory,
    TrainingConfigError,
    accuracy,
    backward,
    build_network,
    forward,
    loss,
    sgd_step,
    train,
)

__all__ = [
    "BuildError",
    "LayerInstance",
    "Network",
    "ShapeError",
    "TrainHistory",
    "TrainingConfigError",
    "accuracy",
    "apply_parameters",
    "backward",
    "build_network",
    "forward",
    "load_parameters",
    "loss",
    "save_parameters",
    "sgd_step",
    "train",
]
