from __future__ import annotations

from .checkpoint import deserialize, load_model, quantize, save_model, serialize
from .losses import bsce_loss, ce_loss, softmax
from .model import CLASSIFIER, ArchSpec, Layer, ModelParams, block_name, forward, init_model
from .optim import OptState, SGDHyper, sgd_step
from .training import TrainResult, loss_and_grads, train_epochs

__all__ = [
    "CLASSIFIER",
    "ArchSpec",
    "Layer",
    "ModelParams",
    "OptState",
    "SGDHyper",
    "TrainResult",
    "block_name",
    "bsce_loss",
    "ce_loss",
    "deserialize",
    "forward",
    "init_model",
    "load_model",
    "loss_and_grads",
    "quantize",
    "save_model",
    "serialize",
    "sgd_step",
    "softmax",
    "train_epochs",
]
