from __future__ import annotations

from pathlib import Path
from typing import Callable, List

import numpy as np
import pytest

from fedecl.config import Settings
from fedecl.data.datasets import ClientDataset, LabeledDataset
from fedecl.nncore.model import ArchSpec, init_model


@pytest.fixture
def small_arch() -> ArchSpec:
    return ArchSpec(input_dim=5, block_widths=(6, 4), num_classes=3, init_seed=7)


@pytest.fixture
def small_model(small_arch):
    return init_model(small_arch)


@pytest.fixture
def make_client() -> Callable[..., ClientDataset]:
    """Gaussian blobs far apart: one centre per class along the first axes."""

    def _make(counts, input_dim: int = 5, client_id: int = 0, seed: int = 0, spread: float = 0.1):
        rng = np.random.default_rng(seed)
        num_classes = len(counts)
        features, labels = [], []
        for label, count in enumerate(counts):
            centre = np.zeros(input_dim)
            centre[label % input_dim] = 3.0 if label < input_dim else -3.0
            features.append(centre + spread * rng.standard_normal((count, input_dim)))
            labels.append(np.full(count, label))
        data = LabeledDataset(
            features=np.concatenate(features) if features else np.zeros((0, input_dim)),
            labels=np.concatenate(labels) if labels else np.zeros(0, dtype=np.int64),
            num_classes=num_classes,
        )
        return ClientDataset.from_subset(client_id, data, np.arange(len(data)))

    return _make


@pytest.fixture
def no_env_settings() -> Settings:
    return Settings(FEDECL_OUTPUT_DIR=None)


@pytest.fixture
def tiny_overrides(tmp_path: Path) -> List[str]:
    """Flags that shrink the desk-scale scenario to a few seconds."""
    return [
        f"output_dir={tmp_path / 'run'}",
        "dataset.num_classes=4",
        "dataset.input_dim=6",
        "dataset.per_class_count=40",
        "dataset.imbalance_factor=4",
        "dataset.test_pool_per_class=30",
        "dataset.test_per_client=20",
        "partition.num_clients=3",
        "partition.alpha=1.0",
        "arch.block_widths=[8, 6]",
        "phase1.rounds=3",
        "phase1.clients_per_round=2",
        "phase1.local_epochs=1",
        "phase1.batch_size=16",
        "phase2.retrain_epochs=2",
        "phase2.expert_epochs=2",
        "phase2.batch_size=16",
        "baselines.local_epochs=2",
        "eval.lambda_sweep=[0.0, 1.0]",
    ]
