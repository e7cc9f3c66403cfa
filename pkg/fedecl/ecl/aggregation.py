"""Inference-time combination of expert and retrained-global logits."""
from __future__ import annotations

from dataclasses import dataclass
from typing import List, Tuple

import numpy as np

from ..data.grouping import GLOBAL_ONLY
from ..exceptions import DegenerateClassifierError, DomainError
from ..nncore.model import forward
from .state import PersonalizedState


@dataclass
class AggregatedLogits:
    logits: np.ndarray
    provenance: np.ndarray

    def provenance_labels(self) -> List[str]:
        return ["global-only" if owner == GLOBAL_ONLY else f"expert{owner}" for owner in self.provenance]


def scale_logits(z, u_c: np.ndarray, u0_c: np.ndarray, class_index: int = -1):
    """``z * ||u_c||^2 / ||u0_c||^2`` for one class."""
    reference = float(np.dot(u0_c.ravel(), u0_c.ravel()))
    if reference == 0.0:
        raise DegenerateClassifierError(class_index)
    return (float(np.dot(u_c.ravel(), u_c.ravel())) / reference) * z


def scale_factors(state: PersonalizedState) -> np.ndarray:
    """Per-class multiplier applied to the owning expert's logit.

    Classes with no owner get 1.0; they never read an expert logit.
    """
    factors = np.ones(state.assignment.num_classes)
    if state.scaling_scheme == "no_scaling":
        return factors
    reference = state.retrained_global.classifier.weight
    for index in state.assignment.active_experts():
        weight = state.experts[index].classifier.weight
        for label in state.assignment.groups[index]:
            if state.norm_mode == "matrix":
                factors[label] = scale_logits(1.0, weight, reference, label)
            else:
                factors[label] = scale_logits(1.0, weight[label], reference[label], label)
    return factors


def aggregate_logits(
    scaled: np.ndarray,
    global_logits: np.ndarray,
    lam: float,
    owners: np.ndarray,
) -> AggregatedLogits:
    """``lam * z_bar + (1 - lam) * z0`` on owned classes, ``z0`` elsewhere.

    Works on a single ``(C,)`` row or a ``(B, C)`` batch.
    """
    if not 0.0 <= lam <= 1.0:
        raise DomainError(f"lambda must lie in [0, 1], got {lam}")
    owned = owners != GLOBAL_ONLY
    mixed = lam * scaled + (1.0 - lam) * global_logits
    return AggregatedLogits(logits=np.where(owned, mixed, global_logits), provenance=owners.copy())


def component_logits(
    inputs: np.ndarray, state: PersonalizedState
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Scaled expert logits, retrained-global logits and per-class owners.

    Columns of classes without an owner are zero in the scaled matrix.
    """
    global_logits = forward(state.retrained_global, inputs)
    scaled = np.zeros_like(global_logits)
    factors = scale_factors(state)
    for index in state.assignment.active_experts():
        classes = list(state.assignment.groups[index])
        expert_logits = forward(state.experts[index], inputs)
        scaled[..., classes] = factors[classes] * expert_logits[..., classes]
    return scaled, global_logits, state.assignment.owners()


def ensemble_logits(inputs: np.ndarray, state: PersonalizedState) -> AggregatedLogits:
    scaled, global_logits, owners = component_logits(inputs, state)
    return aggregate_logits(scaled, global_logits, state.lam, owners)


def predict(x: np.ndarray, state: PersonalizedState) -> Tuple[int, AggregatedLogits]:
    """Label and aggregated logits for one sample; ties go to the lowest class."""
    batch = ensemble_logits(np.asarray(x, dtype=np.float64).reshape(1, -1), state)
    single = AggregatedLogits(logits=batch.logits[0], provenance=batch.provenance)
    return int(np.argmax(single.logits)), single


def predict_batch(inputs: np.ndarray, state: PersonalizedState) -> np.ndarray:
    return np.argmax(ensemble_logits(inputs, state).logits, axis=1)
