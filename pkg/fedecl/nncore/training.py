from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Optional, Protocol, Tuple

import numpy as np

from ..exceptions import DataError, NumericError
from .losses import LossKind, compute_loss
from .model import ModelParams, backward, forward_cached
from .optim import OptState, sgd_step


class TrainingData(Protocol):
    features: np.ndarray
    labels: np.ndarray

    @property
    def class_counts(self) -> np.ndarray: ...


@dataclass
class TrainResult:
    model: ModelParams
    final_loss: float


def loss_and_grads(
    model: ModelParams,
    inputs: np.ndarray,
    labels: np.ndarray,
    loss_kind: LossKind = "ce",
    class_counts: Optional[np.ndarray] = None,
) -> Tuple[float, Dict[str, Tuple[np.ndarray, np.ndarray]]]:
    logits, activations = forward_cached(model, inputs)
    loss, dlogits = compute_loss(loss_kind, logits, labels, class_counts)
    return loss, backward(model, activations, dlogits)


def epoch_order(num_samples: int, shuffle_seed: int, epoch: int) -> np.ndarray:
    return np.random.default_rng([shuffle_seed, epoch]).permutation(num_samples)


def train_epochs(
    model: ModelParams,
    dataset: TrainingData,
    epochs: int,
    loss_kind: LossKind,
    batch_size: int,
    opt: OptState,
    shuffle_seed: int,
    class_counts: Optional[np.ndarray] = None,
) -> TrainResult:
    """Mini-batch SGD over ``dataset`` for ``epochs`` passes, in place.

    The visiting order of epoch ``e`` depends only on ``(shuffle_seed, e)``.
    BSCE uses ``class_counts`` when given, otherwise the dataset's own counts.
    ``final_loss`` is the sample-weighted mean batch loss of the last epoch
    (NaN when no epoch ran).
    """
    num_samples = int(dataset.labels.shape[0])
    if num_samples == 0:
        raise DataError("cannot train on an empty dataset")
    if batch_size < 1:
        raise ValueError("batch_size must be positive")
    counts = dataset.class_counts if class_counts is None and loss_kind == "bsce" else class_counts

    final_loss = float("nan")
    for epoch in range(epochs):
        order = epoch_order(num_samples, shuffle_seed, epoch)
        total = 0.0
        for start in range(0, num_samples, batch_size):
            index = order[start:start + batch_size]
            loss, grads = loss_and_grads(
                model, dataset.features[index], dataset.labels[index], loss_kind, counts
            )
            if not np.isfinite(loss):
                raise NumericError(f"non-finite loss at epoch {epoch}")
            sgd_step(model, grads, opt)
            total += loss * index.shape[0]
        final_loss = total / num_samples
    return TrainResult(model=model, final_loss=final_loss)
