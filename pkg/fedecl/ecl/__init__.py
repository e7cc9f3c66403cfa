from __future__ import annotations

from .aggregation import (
    AggregatedLogits,
    aggregate_logits,
    component_logits,
    ensemble_logits,
    predict,
    predict_batch,
    scale_factors,
    scale_logits,
)
from .experts import expert_scope, init_experts, retrain_global_classifier, train_expert
from .state import PersonalizedState, decode_state, encode_state, load_state, save_state

__all__ = [
    "AggregatedLogits",
    "PersonalizedState",
    "aggregate_logits",
    "component_logits",
    "decode_state",
    "encode_state",
    "ensemble_logits",
    "expert_scope",
    "init_experts",
    "load_state",
    "predict",
    "predict_batch",
    "retrain_global_classifier",
    "save_state",
    "scale_factors",
    "scale_logits",
    "train_expert",
]
