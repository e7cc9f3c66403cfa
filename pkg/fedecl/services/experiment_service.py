"""End-to-end experiment orchestration behind the ``fedecl`` subcommands.

Output layout under ``output_dir``::

    partition.csv            client, class, count
    partition_summary.csv    client, samples, classes, local_if
    round_log.csv            round, client, loss, lr
    checkpoints/global.fecl  Phase I model
    checkpoints/clients/client_{k:03d}.fecs
    metrics.csv, summary.json, class_gap.csv
    report/                  merged metrics of several runs
"""
from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..data.datasets import ClientDataset, LabeledDataset, load_csv, split_per_class, synth_generate
from ..data.longtail import shape_longtail
from ..data.partition import PartitionSpec, dirichlet_partition, local_imbalance, write_partition_csv
from ..data.testsets import build_client_testset
from ..ecl.state import PersonalizedState, decode_state, encode_state
from ..exceptions import CheckpointError, ConfigError, FedECLError
from ..nncore.checkpoint import load_model, quantize, save_model
from ..nncore.model import ArchSpec, ModelParams
from ..schemas.experiment import ExperimentConfig, FedConfig
from ..schemas.records import MetricsRecord, RoundLog
from ..utils.logging import get_logger
from ..utils.seeding import derive_seed
from .ecl_service import ECLService, load_states, save_states
from .eval_service import EvalService
from .fed_service import FedService, write_round_log
from .report_service import ReportService, ReportSummary, read_metrics_csv, summarize

logger = get_logger("experiment")

PARTITION_FILE = "partition.csv"
PARTITION_SUMMARY_FILE = "partition_summary.csv"
ROUND_LOG_FILE = "round_log.csv"
CHECKPOINT_DIR = "checkpoints"
GLOBAL_CHECKPOINT = "global.fecl"
CLIENT_CHECKPOINT_DIR = "clients"
REPORT_DIR = "report"


@dataclass
class Scenario:
    train: LabeledDataset
    clients: List[ClientDataset]
    pool: LabeledDataset
    testsets: List[Optional[LabeledDataset]]

    @property
    def global_counts(self) -> np.ndarray:
        return self.train.class_counts


@dataclass
class TrainOutcome:
    global_model: ModelParams
    states: List[PersonalizedState]
    logs: List[RoundLog]


class ExperimentService:
    """Runs partition, train, eval and report for one experiment config.

    Every random stream hangs off the master seed through ``derive_seed`` with a
    fixed role name, so sections that are switched off never shift the others.
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config

    @property
    def output_dir(self) -> Path:
        return self.config.output_dir

    @property
    def checkpoint_dir(self) -> Path:
        return self.output_dir / CHECKPOINT_DIR

    def sub_seed(self, role: str, *index: int) -> int:
        return derive_seed(self.config.seed, role, *index)

    def partition_spec(self) -> PartitionSpec:
        partition = self.config.partition
        seed = partition.seed if partition.seed is not None else self.sub_seed("partition")
        return PartitionSpec(num_clients=partition.num_clients, alpha=partition.alpha, seed=seed)

    def phase1_config(self) -> FedConfig:
        phase1 = self.config.phase1
        if phase1.seed is not None:
            return phase1
        return phase1.model_copy(update={"seed": self.sub_seed("phase1")})

    def arch(self, input_dim: int) -> ArchSpec:
        return ArchSpec(
            input_dim=input_dim,
            block_widths=tuple(self.config.arch.block_widths),
            num_classes=self.config.dataset.num_classes,
            init_seed=self.sub_seed("init"),
        )

    def _load_data(self) -> Tuple[LabeledDataset, LabeledDataset]:
        dataset = self.config.dataset
        if dataset.source == "csv":
            train = load_csv(dataset.train_csv, dataset.num_classes)
            pool = load_csv(dataset.test_csv, dataset.num_classes)
            if train.input_dim != pool.input_dim:
                raise ConfigError("dataset.test_csv", "feature width differs from the training CSV")
            return train, pool
        data = synth_generate(
            dataset.num_classes,
            dataset.input_dim,
            dataset.per_class_count + dataset.test_pool_per_class,
            dataset.spread,
            self.sub_seed("synth"),
        )
        return split_per_class(data, dataset.per_class_count)

    def build_scenario(self) -> Scenario:
        """Shaped training set, client partition, test pool and matched client test sets."""
        dataset = self.config.dataset
        raw, pool = self._load_data()
        train = shape_longtail(raw, dataset.imbalance_factor, self.sub_seed("longtail"))
        clients = dirichlet_partition(train, self.partition_spec())
        testsets: List[Optional[LabeledDataset]] = []
        for client in clients:
            if len(client) == 0:
                testsets.append(None)
                continue
            testsets.append(
                build_client_testset(
                    pool,
                    client.class_counts,
                    dataset.test_per_client,
                    self.sub_seed("testset", client.client_id),
                )
            )
        logger.info(
            f"Scenario ready: {len(train)} training samples over {train.num_classes} classes "
            f"(counts {train.class_counts.tolist()}), {len(clients)} clients, {len(pool)} pooled test samples"
        )
        return Scenario(train=train, clients=clients, pool=pool, testsets=testsets)

    def cmd_partition(self) -> Path:
        """Write the per-client class counts and each client's local imbalance factor."""
        scenario = self.build_scenario()
        write_partition_csv(self.output_dir / PARTITION_FILE, scenario.clients)
        summary_path = self.output_dir / PARTITION_SUMMARY_FILE
        with summary_path.open("w", newline="", encoding="utf-8") as handle:
            writer = csv.writer(handle, lineterminator="\n")
            writer.writerow(["client", "samples", "classes", "local_if"])
            for client in scenario.clients:
                counts = client.class_counts
                classes = int(np.count_nonzero(counts))
                writer.writerow([client.client_id, len(client), classes, repr(local_imbalance(counts))])
        missing = sum(1 for client in scenario.clients if np.any(client.class_counts == 0))
        logger.info(f"Partition written to {self.output_dir}; {missing} client(s) miss at least one class")
        return self.output_dir / PARTITION_FILE

    def train(self, scenario: Scenario) -> TrainOutcome:
        """Phase I then Phase II, with every model as it reads back from a checkpoint."""
        arch = self.arch(scenario.train.input_dim)
        global_model, logs = FedService(self.phase1_config()).run_phase1(scenario.clients, arch)
        global_model = quantize(global_model)
        ecl = ECLService(self.config.phase2, self.sub_seed("phase2"))
        states = ecl.run_phase2(global_model, scenario.clients)
        states = [decode_state(encode_state(state)) for state in states]
        return TrainOutcome(global_model=global_model, states=states, logs=logs)

    def cmd_train(self) -> TrainOutcome:
        scenario = self.build_scenario()
        write_partition_csv(self.output_dir / PARTITION_FILE, scenario.clients)
        outcome = self.train(scenario)
        write_round_log(self.output_dir / ROUND_LOG_FILE, outcome.logs)
        save_model(self.checkpoint_dir / GLOBAL_CHECKPOINT, outcome.global_model)
        save_states(self.checkpoint_dir / CLIENT_CHECKPOINT_DIR, outcome.states)
        logger.info(f"Checkpoints written to {self.checkpoint_dir}")
        return outcome

    def evaluate(
        self,
        scenario: Scenario,
        global_model: ModelParams,
        states: Sequence[PersonalizedState],
        lambda_sweep: Optional[Sequence[float]] = None,
    ) -> List[MetricsRecord]:
        service = EvalService(self.config, scenario.testsets, scenario.pool, scenario.global_counts.tolist())
        records = service.evaluate_fedavg(global_model)
        records += service.evaluate_ecl(states, lambda_sweep)
        if self.config.baselines.fedavg_ft:
            records += service.run_baseline_fedavg_ft(global_model, scenario.clients)
        if self.config.baselines.local:
            records += service.run_baseline_local(scenario.clients, self.arch(scenario.train.input_dim))
        return records

    def _emit(self, records: Sequence[MetricsRecord]) -> Path:
        gap = ("ecl", "fedavg_ft") if self.config.baselines.fedavg_ft else None
        return ReportService(self.output_dir).emit_report(records, self.config.dataset.num_classes, gap)

    def load_checkpoints(
        self, scenario: Scenario, checkpoint_dir: Optional[Path] = None
    ) -> Tuple[ModelParams, List[PersonalizedState]]:
        directory = checkpoint_dir or self.checkpoint_dir
        global_model = load_model(directory / GLOBAL_CHECKPOINT)
        expected = self.arch(scenario.train.input_dim)
        if global_model.spec.layer_shapes() != expected.layer_shapes():
            raise CheckpointError(
                "architecture differs from the configured experiment", directory / GLOBAL_CHECKPOINT
            )
        states = load_states(directory / CLIENT_CHECKPOINT_DIR, len(scenario.clients))
        return global_model, states

    def cmd_eval(
        self, checkpoint_dir: Optional[Path] = None, lambda_sweep: Optional[Sequence[float]] = None
    ) -> List[MetricsRecord]:
        scenario = self.build_scenario()
        global_model, states = self.load_checkpoints(scenario, checkpoint_dir)
        records = self.evaluate(scenario, global_model, states, lambda_sweep)
        self._emit(records)
        return records

    def run(self, lambda_sweep: Optional[Sequence[float]] = None) -> List[MetricsRecord]:
        """Train and evaluate in one process without touching checkpoint files."""
        scenario = self.build_scenario()
        outcome = self.train(scenario)
        records = self.evaluate(scenario, outcome.global_model, outcome.states, lambda_sweep)
        self._emit(records)
        return records

    def cmd_report(self, metrics_paths: Sequence[Path]) -> ReportSummary:
        """Merge the metrics of several runs into ``report/``."""
        if not metrics_paths:
            raise FedECLError("report needs at least one metrics file", exit_code=1)
        records: List[MetricsRecord] = []
        for path in metrics_paths:
            records += read_metrics_csv(Path(path))
        widths = {len(record.per_class) for record in records}
        if len(widths) > 1:
            raise FedECLError(f"metrics files disagree on the number of classes: {sorted(widths)}")
        ReportService(self.output_dir / REPORT_DIR).emit_report(records, widths.pop() if widths else None)
        return summarize(records)

