from .io import load_model, save_model
from .model import (
    DETERMINISTIC,
    DROPOUT,
    DROPOUT_SEEDED,
    Architecture,
    DenseLayer,
    MlpModel,
    ReplicateMasks,
    RngMasks,
    forward,
    init_model,
    predict_raw,
)
from .optim import OptimizerState, optimizer_step
from .tensor import Tensor, no_grad, sigmoid, softplus
from .train import TrainingData, TrainingHistory, train

__all__ = [
    "Architecture",
    "DenseLayer",
    "DETERMINISTIC",
    "DROPOUT",
    "DROPOUT_SEEDED",
    "MlpModel",
    "OptimizerState",
    "ReplicateMasks",
    "RngMasks",
    "Tensor",
    "TrainingData",
    "TrainingHistory",
    "forward",
    "init_model",
    "load_model",
    "no_grad",
    "optimizer_step",
    "predict_raw",
    "save_model",
    "sigmoid",
    "softplus",
    "train",
]
