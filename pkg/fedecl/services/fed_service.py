from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from ..data.datasets import ClientDataset
from ..fed.fedavg import aggregate, local_update, sample_clients
from ..nncore.model import ArchSpec, ModelParams, init_model
from ..nncore.training import TrainResult
from ..schemas.experiment import FedConfig
from ..schemas.records import RoundLog
from ..utils.logging import get_logger

logger = get_logger("fed")


class FedService:
    """Phase I: FedAvg over the clients that hold data."""

    def __init__(self, config: FedConfig):
        self._config = config

    def _train_round(
        self, model: ModelParams, clients: Sequence[ClientDataset], selected: List[int], round_index: int
    ) -> List[TrainResult]:
        def _one(client_id: int) -> TrainResult:
            return local_update(model, clients[client_id], self._config, round_index)

        if self._config.workers > 1 and len(selected) > 1:
            with ThreadPoolExecutor(max_workers=self._config.workers) as pool:
                return list(pool.map(_one, selected))
        return [_one(client_id) for client_id in selected]

    def run_phase1(
        self,
        clients: Sequence[ClientDataset],
        arch: ArchSpec,
        initial: Optional[ModelParams] = None,
    ) -> Tuple[ModelParams, List[RoundLog]]:
        """Run ``rounds`` of sample -> local update -> aggregate.

        Clients without samples never enter the sampling pool.
        """
        config = self._config
        model = initial.copy() if initial is not None else init_model(arch)
        eligible = [client.client_id for client in clients if len(client) > 0]
        skipped = len(clients) - len(eligible)
        if skipped:
            logger.warning(f"{skipped} client(s) hold no samples and are excluded from sampling")
        if not eligible and config.rounds > 0:
            logger.warning("No client holds data; returning the initial model")
            return model, []

        logs: List[RoundLog] = []
        for round_index in range(config.rounds):
            selected = sample_clients(round_index, config, eligible)
            if len(selected) < config.clients_per_round:
                logger.warning(
                    f"Round {round_index}: only {len(selected)} eligible client(s) for "
                    f"{config.clients_per_round} slots"
                )
            results = self._train_round(model, clients, selected, round_index)
            sizes = [len(clients[client_id]) for client_id in selected]
            model = aggregate([result.model for result in results], sizes)
            losses = {client_id: result.final_loss for client_id, result in zip(selected, results)}
            logs.append(
                RoundLog(round=round_index, lr=config.lr_at(round_index), clients=selected, losses=losses)
            )
            logger.debug(f"Round {round_index}: clients={selected} lr={config.lr_at(round_index)}")
            if (round_index + 1) % 10 == 0 or round_index + 1 == config.rounds:
                mean_loss = sum(losses.values()) / len(losses)
                logger.info(
                    f"Phase I round {round_index + 1}/{config.rounds}: mean local loss {mean_loss:.4f}"
                )
        return model, logs


def write_round_log(path: Path, logs: Sequence[RoundLog]) -> None:
    """One ``(round, client, loss)`` row per participant per round."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["round", "client", "loss", "lr"])
        for log in logs:
            for client_id in log.clients:
                writer.writerow([log.round, client_id, repr(log.losses[client_id]), repr(log.lr)])
