"""Feed-forward model: affine+ReLU blocks followed by a linear classifier."""
from __future__ import annotations

import copy
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..exceptions import ShapeError

CLASSIFIER = "classifier"


def block_name(index: int) -> str:
    return f"block{index}"


class ArchSpec(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")

    input_dim: int = Field(ge=1)
    block_widths: Tuple[int, ...] = Field(min_length=1)
    num_classes: int = Field(ge=1)
    init_seed: int = Field(default=0, ge=0, lt=2**64)

    @model_validator(mode="after")
    def _positive_widths(self) -> "ArchSpec":
        if any(width < 1 for width in self.block_widths):
            raise ValueError("block widths must be positive")
        return self

    @property
    def feature_dim(self) -> int:
        return self.block_widths[-1]

    def layer_shapes(self) -> List[Tuple[str, int, int]]:
        """(group, out, in) for every layer in declaration order."""
        shapes = []
        fan_in = self.input_dim
        for index, width in enumerate(self.block_widths):
            shapes.append((block_name(index), width, fan_in))
            fan_in = width
        shapes.append((CLASSIFIER, self.num_classes, fan_in))
        return shapes


@dataclass
class Layer:
    weight: np.ndarray
    bias: np.ndarray

    def arrays(self) -> Tuple[np.ndarray, np.ndarray]:
        return self.weight, self.bias


@dataclass
class ModelParams:
    spec: ArchSpec
    blocks: List[Layer]
    classifier: Layer
    freeze_mask: Dict[str, bool] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for name in self.group_names():
            self.freeze_mask.setdefault(name, False)

    def group_names(self) -> List[str]:
        return [block_name(i) for i in range(len(self.blocks))] + [CLASSIFIER]

    def group(self, name: str) -> Layer:
        if name == CLASSIFIER:
            return self.classifier
        return self.blocks[int(name.removeprefix("block"))]

    def groups(self) -> Iterator[Tuple[str, Layer]]:
        for name in self.group_names():
            yield name, self.group(name)

    def trainable_groups(self) -> List[str]:
        return [name for name in self.group_names() if not self.freeze_mask[name]]

    def freeze_only(self, trainable: List[str]) -> None:
        """Freeze every group except ``trainable``."""
        unknown = set(trainable) - set(self.group_names())
        if unknown:
            raise ValueError(f"unknown parameter groups: {sorted(unknown)}")
        for name in self.group_names():
            self.freeze_mask[name] = name not in trainable

    def unfreeze_all(self) -> None:
        for name in self.group_names():
            self.freeze_mask[name] = False

    def copy(self) -> "ModelParams":
        return copy.deepcopy(self)

    def arrays(self) -> List[np.ndarray]:
        """All parameter arrays in declaration order."""
        return [array for _, layer in self.groups() for array in layer.arrays()]

    def backbone_bytes(self) -> bytes:
        return b"".join(array.tobytes() for layer in self.blocks for array in layer.arrays())

    def bit_equal(self, other: "ModelParams") -> bool:
        if self.spec != other.spec:
            return False
        return all(
            a.shape == b.shape and a.tobytes() == b.tobytes()
            for a, b in zip(self.arrays(), other.arrays())
        )


def init_model(spec: ArchSpec) -> ModelParams:
    """Glorot-uniform weights from ``spec.init_seed``, zero biases.

    Layers are drawn in declaration order (blocks, then classifier), each
    weight matrix as a single row-major ``(out, in)`` draw.
    """
    rng = np.random.default_rng(spec.init_seed)
    layers = []
    for _, fan_out, fan_in in spec.layer_shapes():
        bound = np.sqrt(6.0 / (fan_in + fan_out))
        weight = rng.uniform(-bound, bound, size=(fan_out, fan_in))
        layers.append(Layer(weight=weight, bias=np.zeros(fan_out)))
    return ModelParams(spec=spec, blocks=layers[:-1], classifier=layers[-1])


def _check_inputs(model: ModelParams, inputs: np.ndarray) -> np.ndarray:
    inputs = np.asarray(inputs, dtype=np.float64)
    if inputs.ndim != 2 or inputs.shape[1] != model.spec.input_dim:
        raise ShapeError("inputs", f"(B, {model.spec.input_dim})", inputs.shape)
    return inputs


def forward_cached(model: ModelParams, inputs: np.ndarray) -> Tuple[np.ndarray, List[np.ndarray]]:
    """Logits plus the input of every layer (post-ReLU activations)."""
    hidden = _check_inputs(model, inputs)
    activations = [hidden]
    for layer in model.blocks:
        hidden = np.maximum(hidden @ layer.weight.T + layer.bias, 0.0)
        activations.append(hidden)
    logits = hidden @ model.classifier.weight.T + model.classifier.bias
    return logits, activations


def forward(model: ModelParams, inputs: np.ndarray) -> np.ndarray:
    logits, _ = forward_cached(model, inputs)
    return logits


def backward(
    model: ModelParams,
    activations: List[np.ndarray],
    dlogits: np.ndarray,
) -> Dict[str, Tuple[np.ndarray, np.ndarray]]:
    """Gradients for the unfrozen groups only.

    Back-propagation stops at the lowest unfrozen block, so a frozen backbone
    costs nothing beyond the forward pass.
    """
    trainable = set(model.trainable_groups())
    grads: Dict[str, Tuple[np.ndarray, np.ndarray]] = {}
    if CLASSIFIER in trainable:
        grads[CLASSIFIER] = (dlogits.T @ activations[-1], dlogits.sum(axis=0))

    unfrozen_blocks = [i for i in range(len(model.blocks)) if block_name(i) in trainable]
    if not unfrozen_blocks:
        return grads
    lowest = min(unfrozen_blocks)

    upstream = dlogits @ model.classifier.weight
    for index in range(len(model.blocks) - 1, lowest - 1, -1):
        out = activations[index + 1]
        delta = upstream * (out > 0.0)
        name = block_name(index)
        if name in trainable:
            grads[name] = (delta.T @ activations[index], delta.sum(axis=0))
        if index > lowest:
            upstream = delta @ model.blocks[index].weight
    return grads
