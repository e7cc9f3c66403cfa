from __future__ import annotations

import csv
from pathlib import Path
from typing import List

import numpy as np
from pydantic import BaseModel, ConfigDict, Field

from ..utils.rounding import largest_remainder
from .datasets import ClientDataset, LabeledDataset


class PartitionSpec(BaseModel):
    model_config = ConfigDict(frozen=True)

    num_clients: int = Field(ge=1)
    alpha: float = Field(gt=0.0)
    seed: int = Field(ge=0, lt=2**64)


def dirichlet_proportions(rng: np.random.Generator, alpha: float, num_clients: int) -> np.ndarray:
    """One Dirichlet(alpha * 1_K) draw as normalised Gamma(alpha, 1) variates."""
    gammas = rng.standard_gamma(alpha, size=num_clients)
    total = gammas.sum()
    if total <= 0:
        # every variate underflowed; the limit of the normalised draw is uniform
        return np.full(num_clients, 1.0 / num_clients)
    return gammas / total


def dirichlet_partition(data: LabeledDataset, spec: PartitionSpec) -> List[ClientDataset]:
    """Split every class across clients by a per-class Dirichlet draw.

    Class ``c`` uses the stream ``default_rng([seed, c])``: first the Gamma
    variates, then a permutation of the class's samples, which are dealt out
    in client order using largest-remainder counts of ``p * n_c``.
    """
    assignments: List[List[np.ndarray]] = [[] for _ in range(spec.num_clients)]
    for label in range(data.num_classes):
        pool = data.indices_of(label)
        rng = np.random.default_rng([spec.seed, label])
        proportions = dirichlet_proportions(rng, spec.alpha, spec.num_clients)
        if pool.size == 0:
            continue
        counts = largest_remainder(proportions, int(pool.size))
        shuffled = pool[rng.permutation(pool.size)]
        bounds = np.concatenate([[0], np.cumsum(counts)])
        for client, (start, end) in enumerate(zip(bounds[:-1], bounds[1:])):
            assignments[client].append(shuffled[start:end])

    clients = []
    for client, parts in enumerate(assignments):
        index = np.sort(np.concatenate(parts)) if parts else np.zeros(0, dtype=np.int64)
        clients.append(ClientDataset.from_subset(client, data, index))
    return clients


def count_table(clients: List[ClientDataset]) -> np.ndarray:
    """``(K, C)`` matrix of per-client per-class counts."""
    return np.stack([client.class_counts for client in clients])


def local_imbalance(counts: np.ndarray) -> float:
    """max / min over nonzero class counts; NaN for a client with no data."""
    present = counts[counts > 0]
    if present.size == 0:
        return float("nan")
    return float(present.max() / present.min())


def write_partition_csv(path: Path, clients: List[ClientDataset]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["client", "class", "count"])
        for client in clients:
            for label, count in enumerate(client.class_counts):
                writer.writerow([client.client_id, label, int(count)])
