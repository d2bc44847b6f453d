"""Minimal float64 training core used by the source model, teachers and student."""

from .layers import Conv2d, Flatten, Linear, ReLU, Sequential, conv_stack, cross_entropy
from .models import (
    FrozenSourceModel,
    ReTeacher,
    ScratchModel,
    TargetModel,
    TransferModel,
    build_model,
    prompt_backward,
)
from .optim import Adam
from .train import (
    StudentConfig,
    TrainConfig,
    evaluate,
    fit,
    fit_model,
    train_reteacher,
    train_source,
    train_student,
)

__all__ = [
    "Adam", "Conv2d", "Flatten", "FrozenSourceModel", "Linear", "ReLU", "ReTeacher",
    "ScratchModel", "Sequential", "StudentConfig", "TargetModel", "TrainConfig",
    "TransferModel", "build_model", "conv_stack", "cross_entropy", "evaluate", "fit",
    "fit_model", "prompt_backward", "train_reteacher", "train_source", "train_student",
]
