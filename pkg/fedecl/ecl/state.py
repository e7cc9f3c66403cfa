from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Tuple

from pydantic import BaseModel, Field, ValidationError

from ..data.grouping import ExpertAssignment
from ..exceptions import CheckpointError, DomainError
from ..nncore.checkpoint import (
    deserialize,
    pack_sections,
    read_bytes,
    serialize,
    unpack_sections,
    write_bytes,
)
from ..nncore.model import ModelParams
from ..schemas.experiment import NormMode, ScalingScheme


@dataclass
class PersonalizedState:
    """Everything one client needs at inference time.

    ``experts[m]`` is ``None`` when group ``m`` of the assignment is empty.
    """

    client_id: int
    retrained_global: ModelParams
    experts: List[Optional[ModelParams]]
    assignment: ExpertAssignment
    lam: float = 0.5
    scaling_scheme: ScalingScheme = "ecl_scaling"
    norm_mode: NormMode = "row"

    def __post_init__(self) -> None:
        if not 0.0 <= self.lam <= 1.0:
            raise DomainError(f"lambda must lie in [0, 1], got {self.lam}")
        if len(self.experts) != self.assignment.num_experts:
            raise DomainError("experts and assignment groups are not index-aligned")
        for index, expert in enumerate(self.experts):
            if (expert is None) != self.assignment.is_empty(index):
                raise DomainError(f"expert {index} presence disagrees with its class group")
            if expert is not None and expert.spec.layer_shapes() != self.retrained_global.spec.layer_shapes():
                raise DomainError(f"expert {index} architecture differs from the global model")

    def with_aggregation(
        self, lam: Optional[float] = None, scaling_scheme: Optional[ScalingScheme] = None
    ) -> "PersonalizedState":
        updates = {}
        if lam is not None:
            updates["lam"] = lam
        if scaling_scheme is not None:
            updates["scaling_scheme"] = scaling_scheme
        return dataclasses.replace(self, **updates)


class StateMeta(BaseModel):
    client_id: int
    lam: float = Field(ge=0.0, le=1.0)
    scaling_scheme: ScalingScheme
    norm_mode: NormMode
    num_classes: int
    groups: List[List[int]]
    sorted_classes: List[int]


def _expert_section(index: int) -> str:
    return f"expert{index}"


def encode_state(state: PersonalizedState) -> bytes:
    meta = StateMeta(
        client_id=state.client_id,
        lam=state.lam,
        scaling_scheme=state.scaling_scheme,
        norm_mode=state.norm_mode,
        num_classes=state.assignment.num_classes,
        groups=[list(group) for group in state.assignment.groups],
        sorted_classes=list(state.assignment.sorted_classes),
    )
    sections: List[Tuple[str, bytes]] = [
        ("meta", meta.model_dump_json().encode("utf-8")),
        ("global", serialize(state.retrained_global)),
    ]
    for index, expert in enumerate(state.experts):
        if expert is not None:
            sections.append((_expert_section(index), serialize(expert)))
    return pack_sections(sections)


def decode_state(payload: bytes) -> PersonalizedState:
    sections = dict(unpack_sections(payload))
    for required in ("meta", "global"):
        if required not in sections:
            raise CheckpointError(f"state file lacks section '{required}'")
    try:
        meta = StateMeta.model_validate_json(sections["meta"])
    except ValidationError as exc:
        raise CheckpointError(f"invalid state metadata ({exc.errors()[0]['msg']})") from None

    assignment = ExpertAssignment(
        groups=tuple(tuple(group) for group in meta.groups),
        sorted_classes=tuple(meta.sorted_classes),
        num_classes=meta.num_classes,
    )
    experts: List[Optional[ModelParams]] = []
    for index, group in enumerate(assignment.groups):
        name = _expert_section(index)
        if group and name not in sections:
            raise CheckpointError(f"state file lacks section '{name}'")
        experts.append(deserialize(sections[name]) if group else None)
    try:
        return PersonalizedState(
            client_id=meta.client_id,
            retrained_global=deserialize(sections["global"]),
            experts=experts,
            assignment=assignment,
            lam=meta.lam,
            scaling_scheme=meta.scaling_scheme,
            norm_mode=meta.norm_mode,
        )
    except DomainError as exc:
        raise CheckpointError(f"inconsistent state file ({exc.message})") from None


def save_state(path: Path, state: PersonalizedState) -> None:
    write_bytes(path, encode_state(state))


def load_state(path: Path) -> PersonalizedState:
    payload = read_bytes(path)
    try:
        return decode_state(payload)
    except CheckpointError as exc:
        raise CheckpointError(exc.message, path) from None
