from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..exceptions import FreezeError, ShapeError
from .model import ModelParams

Grads = Mapping[str, Tuple[np.ndarray, np.ndarray]]


class SGDHyper(BaseModel):
    model_config = ConfigDict(frozen=True)

    # zero is accepted: a zero-rate step leaves parameters bit-identical
    learning_rate: float = Field(ge=0.0)
    momentum: float = Field(default=0.0, ge=0.0, lt=1.0)
    weight_decay: float = Field(default=0.0, ge=0.0)


@dataclass
class OptState:
    hyper: SGDHyper
    buffers: Dict[str, Tuple[np.ndarray, np.ndarray]] = field(default_factory=dict)

    @classmethod
    def create(cls, model: ModelParams, hyper: SGDHyper) -> "OptState":
        buffers = {
            name: (np.zeros_like(model.group(name).weight), np.zeros_like(model.group(name).bias))
            for name in model.trainable_groups()
        }
        return cls(hyper=hyper, buffers=buffers)


def sgd_step(model: ModelParams, grads: Grads, opt: OptState) -> ModelParams:
    """One momentum-SGD step, in place on ``model`` and ``opt``.

    ``buf <- momentum * buf + grad + weight_decay * param``;
    ``param <- param - lr * buf``. Frozen groups are never touched.
    """
    trainable = model.trainable_groups()
    for name in grads:
        if name not in model.freeze_mask:
            raise ShapeError("gradient group", model.group_names(), name)
        if model.freeze_mask[name]:
            raise FreezeError(name)
    missing = [name for name in trainable if name not in grads]
    if missing:
        raise ShapeError("gradient groups", trainable, sorted(grads))

    hyper = opt.hyper
    for name in trainable:
        layer = model.group(name)
        if name not in opt.buffers:
            opt.buffers[name] = (np.zeros_like(layer.weight), np.zeros_like(layer.bias))
        for param, grad, buf in zip(layer.arrays(), grads[name], opt.buffers[name]):
            if grad.shape != param.shape:
                raise ShapeError(f"{name} gradient", param.shape, grad.shape)
            buf *= hyper.momentum
            buf += grad
            if hyper.weight_decay:
                buf += hyper.weight_decay * param
            param -= hyper.learning_rate * buf
    return model
