"""FedAvg primitives: client sampling, local update and weighted aggregation."""
from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np

from ..data.datasets import ClientDataset
from ..exceptions import DataError, ShapeError
from ..nncore.model import Layer, ModelParams
from ..nncore.optim import OptState, SGDHyper
from ..nncore.training import TrainResult, train_epochs
from ..schemas.experiment import FedConfig
from ..utils.seeding import derive_seed, rng_for


def _seed(config: FedConfig) -> int:
    return config.seed if config.seed is not None else 0


def sample_clients(
    round_index: int,
    config: FedConfig,
    eligible: Optional[Sequence[int]] = None,
) -> List[int]:
    """Uniform draw without replacement, keyed by ``(seed, round)``.

    ``eligible`` defaults to every client; when it holds fewer than
    ``clients_per_round`` ids, all of them are returned.
    """
    total = config.clients_total or config.clients_per_round
    pool = np.array(sorted(eligible) if eligible is not None else range(total), dtype=np.int64)
    size = min(config.clients_per_round, pool.size)
    if size == pool.size:
        return [int(c) for c in pool]
    rng = rng_for(_seed(config), "sample", round_index)
    return sorted(int(c) for c in rng.choice(pool, size=size, replace=False))


def local_shuffle_seed(config: FedConfig, round_index: int, client_id: int) -> int:
    return derive_seed(_seed(config), "local", round_index, client_id)


def local_update(
    global_model: ModelParams,
    client: ClientDataset,
    config: FedConfig,
    round_index: int = 0,
) -> TrainResult:
    """Train a copy of ``global_model`` for ``local_epochs`` with CE.

    Momentum buffers start from zero every call; the global model is never
    modified.
    """
    if len(client) == 0:
        raise DataError(f"client {client.client_id} has no samples")
    local = global_model.copy()
    local.unfreeze_all()
    hyper = SGDHyper(
        learning_rate=config.lr_at(round_index),
        momentum=config.momentum,
        weight_decay=config.weight_decay,
    )
    return train_epochs(
        local,
        client,
        epochs=config.local_epochs,
        loss_kind="ce",
        batch_size=config.batch_size,
        opt=OptState.create(local, hyper),
        shuffle_seed=local_shuffle_seed(config, round_index, client.client_id),
    )


def aggregate(models: Sequence[ModelParams], sizes: Sequence[int]) -> ModelParams:
    """Dataset-size weighted parameter average, summed in the given order."""
    if not models:
        raise DataError("cannot aggregate an empty model list")
    if len(models) != len(sizes):
        raise ShapeError("client sizes", len(models), len(sizes))
    if any(size <= 0 for size in sizes):
        raise DataError(f"client sizes must be positive, got {list(sizes)}")
    spec = models[0].spec
    for model in models[1:]:
        if model.spec.model_copy(update={"init_seed": spec.init_seed}) != spec:
            raise ShapeError("aggregated model architecture", spec, model.spec)

    weights = np.asarray(sizes, dtype=np.float64) / float(sum(sizes))
    layers = []
    for name, _ in models[0].groups():
        weight = weights[0] * models[0].group(name).weight
        bias = weights[0] * models[0].group(name).bias
        for share, model in zip(weights[1:], models[1:]):
            weight += share * model.group(name).weight
            bias += share * model.group(name).bias
        layers.append(Layer(weight=weight, bias=bias))
    return ModelParams(spec=spec, blocks=layers[:-1], classifier=layers[-1])
