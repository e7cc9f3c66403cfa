from __future__ import annotations

from pathlib import Path
from typing import List, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, model_validator

ScalingScheme = Literal["ecl_scaling", "no_scaling"]
NormMode = Literal["row", "matrix"]


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DatasetConfig(_Section):
    source: Literal["synthetic", "csv"] = Field(default="synthetic", description="학습 데이터 출처")
    train_csv: Optional[Path] = Field(default=None, description="source=csv일 때 학습 CSV 경로")
    test_csv: Optional[Path] = Field(default=None, description="source=csv일 때 테스트 풀 CSV 경로")
    num_classes: int = Field(default=10, ge=1)
    input_dim: int = Field(default=32, ge=1)
    per_class_count: int = Field(default=500, ge=1, description="long-tail 이전 클래스당 표본 수 (n_0)")
    spread: float = Field(default=0.35, ge=0.0)
    imbalance_factor: float = Field(default=100.0, ge=1.0)
    test_pool_per_class: int = Field(default=300, ge=1)
    test_per_client: int = Field(default=200, ge=1)

    @model_validator(mode="after")
    def _csv_paths(self) -> "DatasetConfig":
        if self.source == "csv" and (self.train_csv is None or self.test_csv is None):
            raise ValueError("source=csv requires train_csv and test_csv")
        return self


class PartitionConfig(_Section):
    num_clients: int = Field(default=10, ge=1)
    alpha: float = Field(default=0.2, gt=0.0)
    seed: Optional[int] = Field(default=None, ge=0, description="미지정 시 master seed에서 파생")


class ArchConfig(_Section):
    block_widths: List[int] = Field(default_factory=lambda: [128, 64], min_length=1)

    @model_validator(mode="after")
    def _positive_widths(self) -> "ArchConfig":
        if any(width < 1 for width in self.block_widths):
            raise ValueError("block widths must be positive")
        return self


class FedConfig(_Section):
    rounds: int = Field(default=100, ge=0)
    clients_total: Optional[int] = Field(default=None, ge=1, description="미지정 시 partition.num_clients")
    clients_per_round: int = Field(default=8, ge=1)
    local_epochs: int = Field(default=2, ge=0)
    lr: float = Field(default=0.1, ge=0.0)
    lr_milestone_round: Optional[int] = Field(default=None, ge=0, description="미지정 시 0.4 * rounds")
    lr_after_milestone: float = Field(default=0.01, ge=0.0)
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(default=5e-4, ge=0.0)
    batch_size: int = Field(default=64, ge=1)
    workers: int = Field(default=1, ge=1)
    seed: Optional[int] = Field(default=None, ge=0)

    @property
    def milestone(self) -> int:
        if self.lr_milestone_round is not None:
            return self.lr_milestone_round
        return int(0.4 * self.rounds)

    def lr_at(self, round_index: int) -> float:
        return self.lr if round_index < self.milestone else self.lr_after_milestone

    @model_validator(mode="after")
    def _check_rounds(self) -> "FedConfig":
        if self.lr_milestone_round is not None and self.lr_milestone_round > self.rounds:
            raise ValueError("lr_milestone_round must not exceed rounds")
        if self.clients_total is not None and self.clients_per_round > self.clients_total:
            raise ValueError("clients_per_round must not exceed clients_total")
        return self


class Phase2Config(_Section):
    experts: int = Field(default=2, ge=1, description="전문가 모델 수 M")
    lam: float = Field(default=0.5, ge=0.0, le=1.0)
    scaling_scheme: ScalingScheme = "ecl_scaling"
    norm_mode: NormMode = "row"
    retrain_epochs: int = Field(default=30, ge=0)
    expert_epochs: int = Field(default=30, ge=0)
    lr: float = Field(default=0.01, ge=0.0)
    momentum: float = Field(default=0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(default=5e-4, ge=0.0)
    batch_size: int = Field(default=64, ge=1)
    reinit_expert_classifier: bool = False


class BaselinesConfig(_Section):
    local: bool = True
    fedavg_ft: bool = True
    local_epochs: int = Field(default=50, ge=0)
    local_lr: float = Field(default=0.05, ge=0.0)


class EvalConfig(_Section):
    lambda_sweep: List[float] = Field(default_factory=list)
    compare_schemes: bool = True
    balanced: bool = True

    @model_validator(mode="after")
    def _lambda_range(self) -> "EvalConfig":
        for value in self.lambda_sweep:
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"lambda_sweep value out of range [0, 1]: {value}")
        return self


class ExperimentConfig(_Section):
    dataset: DatasetConfig = Field(default_factory=DatasetConfig)
    partition: PartitionConfig = Field(default_factory=PartitionConfig)
    arch: ArchConfig = Field(default_factory=ArchConfig)
    phase1: FedConfig = Field(default_factory=FedConfig)
    phase2: Phase2Config = Field(default_factory=Phase2Config)
    baselines: BaselinesConfig = Field(default_factory=BaselinesConfig)
    eval: EvalConfig = Field(default_factory=EvalConfig)
    output_dir: Path = Path("runs/desk_scale")
    seed: int = Field(default=0, ge=0, description="master seed")

    @model_validator(mode="after")
    def _fill_clients_total(self) -> "ExperimentConfig":
        total = self.phase1.clients_total
        if total is None:
            self.phase1 = self.phase1.model_copy(update={"clients_total": self.partition.num_clients})
        elif total != self.partition.num_clients:
            raise ValueError("phase1.clients_total must equal partition.num_clients")
        if self.phase1.clients_per_round > self.partition.num_clients:
            raise ValueError("phase1.clients_per_round must not exceed partition.num_clients")
        return self
