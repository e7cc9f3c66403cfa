from __future__ import annotations

from pathlib import Path
from typing import List, Optional, Sequence

from ..data.datasets import ClientDataset
from ..data.grouping import sort_and_group
from ..ecl.experts import init_experts, retrain_global_classifier, train_expert
from ..ecl.state import PersonalizedState, load_state, save_state
from ..nncore.model import ModelParams
from ..schemas.experiment import Phase2Config
from ..utils.logging import get_logger
from ..utils.seeding import derive_seed

logger = get_logger("ecl")


def state_path(directory: Path, client_id: int) -> Path:
    return directory / f"client_{client_id:03d}.fecs"


class ECLService:
    """Phase II: per-client expert personalisation of the Phase I model."""

    def __init__(self, config: Phase2Config, seed: int):
        self._config = config
        self._seed = seed

    def personalize(self, global_model: ModelParams, client: ClientDataset) -> PersonalizedState:
        config = self._config
        assignment = sort_and_group(client.class_counts, config.experts)
        if len(client) == 0:
            logger.warning(f"Client {client.client_id} holds no samples; using the global model only")
            return PersonalizedState(
                client_id=client.client_id,
                retrained_global=global_model.copy(),
                experts=[None] * config.experts,
                assignment=assignment,
                lam=config.lam,
                scaling_scheme=config.scaling_scheme,
                norm_mode=config.norm_mode,
            )

        reinit_seed = None
        if config.reinit_expert_classifier:
            reinit_seed = derive_seed(self._seed, "reinit", client.client_id)
        experts: List[Optional[ModelParams]] = list(init_experts(global_model, config.experts, reinit_seed))
        retrained = retrain_global_classifier(global_model, client, config, self._seed)
        for index, group in enumerate(assignment.groups):
            if not group:
                logger.debug(f"Client {client.client_id}: expert {index} has no classes; skipped")
                experts[index] = None
                continue
            train_expert(experts[index], index, config.experts, client, group, config, self._seed)
        logger.debug(f"Client {client.client_id}: groups={[list(g) for g in assignment.groups]}")
        return PersonalizedState(
            client_id=client.client_id,
            retrained_global=retrained,
            experts=experts,
            assignment=assignment,
            lam=config.lam,
            scaling_scheme=config.scaling_scheme,
            norm_mode=config.norm_mode,
        )

    def run_phase2(
        self, global_model: ModelParams, clients: Sequence[ClientDataset]
    ) -> List[PersonalizedState]:
        states = [self.personalize(global_model, client) for client in clients]
        logger.info(
            f"Phase II complete for {len(states)} client(s) with {self._config.experts} expert(s) each"
        )
        return states


def save_states(directory: Path, states: Sequence[PersonalizedState]) -> None:
    for state in states:
        save_state(state_path(directory, state.client_id), state)


def load_states(directory: Path, num_clients: int) -> List[PersonalizedState]:
    return [load_state(state_path(directory, client_id)) for client_id in range(num_clients)]
