"""Phase II model updates: balanced classifier retraining and expert training."""
from __future__ import annotations

from typing import List, Optional, Sequence

import numpy as np

from ..data.datasets import ClientDataset, LabeledDataset
from ..data.grouping import balance_subset
from ..exceptions import DataError
from ..nncore.losses import LossKind
from ..nncore.model import CLASSIFIER, ModelParams, block_name, init_model
from ..nncore.optim import OptState, SGDHyper
from ..nncore.training import train_epochs
from ..schemas.experiment import Phase2Config
from ..utils.seeding import derive_seed


def _hyper(config: Phase2Config) -> SGDHyper:
    return SGDHyper(learning_rate=config.lr, momentum=config.momentum, weight_decay=config.weight_decay)


def _train_scoped(
    model: ModelParams,
    data: LabeledDataset,
    scope: List[str],
    epochs: int,
    loss_kind: LossKind,
    config: Phase2Config,
    shuffle_seed: int,
    class_counts: Optional[np.ndarray] = None,
) -> ModelParams:
    model.freeze_only(scope)
    train_epochs(
        model,
        data,
        epochs=epochs,
        loss_kind=loss_kind,
        batch_size=config.batch_size,
        opt=OptState.create(model, _hyper(config)),
        shuffle_seed=shuffle_seed,
        class_counts=class_counts,
    )
    model.unfreeze_all()
    return model


def retrain_global_classifier(
    global_model: ModelParams,
    client: ClientDataset,
    config: Phase2Config,
    seed: int,
    loss_kind: LossKind = "bsce",
) -> ModelParams:
    """Retrain only the classifier of a copy of ``global_model`` on all of ``client``.

    BSCE weights each class by the client's own counts; the backbone stays
    bit-identical.
    """
    if len(client) == 0:
        raise DataError(f"client {client.client_id} has no samples")
    model = global_model.copy()
    return _train_scoped(
        model,
        client,
        [CLASSIFIER],
        config.retrain_epochs,
        loss_kind,
        config,
        shuffle_seed=derive_seed(seed, "retrain", client.client_id),
        class_counts=client.class_counts if loss_kind == "bsce" else None,
    )


def init_experts(
    global_model: ModelParams,
    num_experts: int,
    reinit_seed: Optional[int] = None,
) -> List[ModelParams]:
    """Independent deep copies of ``global_model``.

    With ``reinit_seed`` each expert's classifier is re-drawn from the
    initialisation scheme instead of being copied.
    """
    if num_experts < 1:
        raise ValueError("num_experts must be at least 1")
    experts = []
    for index in range(num_experts):
        expert = global_model.copy()
        expert.unfreeze_all()
        if reinit_seed is not None:
            seed = derive_seed(reinit_seed, "expert", index)
            fresh = init_model(expert.spec.model_copy(update={"init_seed": seed}))
            expert.classifier = fresh.classifier
        experts.append(expert)
    return experts


def expert_scope(model: ModelParams, index: int, num_experts: int) -> List[str]:
    """Trainable groups: last block + classifier, or classifier only for the last expert."""
    if index == num_experts - 1:
        return [CLASSIFIER]
    return [block_name(len(model.blocks) - 1), CLASSIFIER]


def train_expert(
    expert: ModelParams,
    index: int,
    num_experts: int,
    client: ClientDataset,
    group: Sequence[int],
    config: Phase2Config,
    seed: int,
) -> ModelParams:
    """Train expert ``index`` (0-based) on the client's samples of ``group``.

    Experts before the last see the raw subset; the last expert sees a
    class-balanced oversampling of it. The CE normaliser spans all classes.
    """
    if not group:
        raise DataError(f"expert {index} has an empty class group")
    subset = client.restrict(group)
    if len(subset) == 0 or np.any(subset.class_counts[list(group)] == 0):
        raise DataError(f"expert {index} group contains classes absent from client {client.client_id}")
    if index == num_experts - 1:
        subset = balance_subset(subset, group, derive_seed(seed, "balance", client.client_id))
    return _train_scoped(
        expert,
        subset,
        expert_scope(expert, index, num_experts),
        config.expert_epochs,
        "ce",
        config,
        shuffle_seed=derive_seed(seed, "expert", client.client_id, index),
    )
