from __future__ import annotations

from .experiment import (
    ArchConfig,
    BaselinesConfig,
    DatasetConfig,
    EvalConfig,
    ExperimentConfig,
    FedConfig,
    NormMode,
    PartitionConfig,
    Phase2Config,
    ScalingScheme,
)
from .records import MetricsRecord, RoundLog

__all__ = [
    "ArchConfig",
    "BaselinesConfig",
    "DatasetConfig",
    "EvalConfig",
    "ExperimentConfig",
    "FedConfig",
    "NormMode",
    "PartitionConfig",
    "Phase2Config",
    "ScalingScheme",
    "MetricsRecord",
    "RoundLog",
]
