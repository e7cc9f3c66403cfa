from __future__ import annotations

import math

import numpy as np
import pytest

from fedecl.data.grouping import sort_and_group
from fedecl.ecl.state import PersonalizedState
from fedecl.eval.metrics import class_thirds, evaluate, macro_mean, score
from fedecl.exceptions import DataError
from fedecl.schemas.experiment import (
    BaselinesConfig,
    EvalConfig,
    ExperimentConfig,
    FedConfig,
    PartitionConfig,
    Phase2Config,
)
from fedecl.services.eval_service import BALANCED_SUFFIX, EvalService, model_predictor, sweep_method
from fedecl.services.report_service import metrics_csv_text


def _config(num_clients: int = 2, balanced: bool = False, **sections) -> ExperimentConfig:
    return ExperimentConfig(
        partition=PartitionConfig(num_clients=num_clients),
        phase1=FedConfig(clients_per_round=1, batch_size=8),
        eval=EvalConfig(balanced=balanced),
        seed=3,
        **sections,
    )


def test_oracle_predictor_scores_one():
    labels = np.array([0, 1, 1, 2])
    record = score(labels, labels, 4, "oracle", 0, "0")
    assert record.overall == 1.0
    assert record.per_class[:3] == [1.0, 1.0, 1.0]
    assert math.isnan(record.per_class[3])


def test_constant_predictor_scores_its_class_only():
    labels = np.array([0, 0, 1, 2, 2])
    record = score(np.zeros(5), labels, 3, "constant", 0, "0")
    assert record.overall == pytest.approx(0.4)
    assert record.per_class == [1.0, 0.0, 0.0]


def test_hand_counted_three_class_case():
    labels = np.array([0, 0, 0, 1, 1, 2])
    predictions = np.array([0, 0, 1, 1, 0, 2])
    record = score(predictions, labels, 3, "m", 1, "7", reference_counts=[3, 2, 1])
    assert record.overall == 4 / 6
    assert record.per_class == [2 / 3, 0.5, 1.0]
    assert (record.head, record.mid, record.tail) == (2 / 3, 0.5, 1.0)
    assert record.client == "7" and record.seed == 1


def test_overall_is_support_weighted_mean_of_per_class_accuracy():
    rng = np.random.default_rng(11)
    for _ in range(200):
        num_classes = int(rng.integers(2, 8))
        size = int(rng.integers(1, 60))
        labels = rng.integers(0, num_classes, size=size)
        predictions = np.where(rng.random(size) < 0.6, labels, rng.integers(0, num_classes, size=size))
        record = score(predictions, labels, num_classes, "m", 0, "0")
        support = np.bincount(labels, minlength=num_classes)
        weighted = sum(
            support[c] * accuracy for c, accuracy in enumerate(record.per_class) if not math.isnan(accuracy)
        )
        assert abs(record.overall - weighted / size) <= 1e-12


def test_score_rejects_empty_test_set():
    with pytest.raises(DataError):
        score(np.zeros(0), np.zeros(0), 3, "m", 0, "0")


def test_class_thirds_partition_every_class():
    head, mid, tail = class_thirds([5, 50, 7, 50, 1, 9, 9, 30, 2, 4])
    assert head == [1, 3, 7, 5]
    assert mid == [6, 2, 0]
    assert tail == [9, 8, 4]
    assert sorted(head + mid + tail) == list(range(10))
    assert class_thirds([1, 1]) == ([0], [1], [])


def test_thirds_without_support_are_nan():
    record = score(np.array([0, 0]), np.array([0, 0]), 3, "m", 0, "0", reference_counts=[3, 2, 1])
    assert record.head == 1.0
    assert math.isnan(record.mid) and math.isnan(record.tail)


def test_macro_mean_skips_nan_entries():
    first = score(np.array([0, 1]), np.array([0, 1]), 3, "m", 0, "0", reference_counts=[3, 2, 1])
    second = score(np.array([0, 0]), np.array([0, 2]), 3, "m", 0, "1", reference_counts=[3, 2, 1])
    mean = macro_mean([first, second])
    assert mean.client == "mean"
    assert mean.overall == 0.75
    assert mean.per_class[0] == 1.0
    assert mean.per_class[1] == 1.0
    assert mean.per_class[2] == 0.0
    assert mean.tail == 0.0
    with pytest.raises(DataError):
        macro_mean([])


def test_evaluate_wraps_predictor(make_client):
    data = make_client([3, 3, 3])
    record = evaluate(lambda inputs: np.full(len(inputs), 2), data, method="two")
    assert record.method == "two"
    assert record.per_class == [0.0, 0.0, 1.0]


def test_weighted_row_pools_client_samples(small_model, make_client):
    testsets = [make_client([4, 2, 0], seed=1), make_client([1, 1, 6], client_id=1, seed=2)]
    service = EvalService(_config(), testsets, testsets[0], reference_counts=[3, 2, 1])
    records = service.evaluate_fedavg(small_model)
    assert [r.client for r in records] == ["0", "1", "mean", "weighted"]

    predictor = model_predictor(small_model)
    hits = sum(int(np.sum(predictor(t.features) == t.labels)) for t in testsets)
    weighted = records[-1]
    assert weighted.overall == hits / 14
    assert records[2].overall == pytest.approx((records[0].overall + records[1].overall) / 2)


def test_identical_clients_make_mean_equal_weighted(small_model, make_client):
    testsets = [make_client([3, 3, 3], seed=4), make_client([3, 3, 3], client_id=1, seed=4)]
    records = EvalService(_config(), testsets, testsets[0], [1, 1, 1]).evaluate_fedavg(small_model)
    mean, weighted = records[-2], records[-1]
    assert mean.same_values(weighted.model_copy(update={"client": "mean"}))


def test_balanced_rows_and_skipped_clients(small_model, make_client):
    pool = make_client([5, 5, 5], seed=9)
    testsets = [make_client([2, 2, 2]), None]
    records = EvalService(_config(balanced=True), testsets, pool, [1, 1, 1]).evaluate_fedavg(small_model)
    assert [(r.method, r.client) for r in records] == [
        ("fedavg", "0"),
        ("fedavg", "mean"),
        ("fedavg", "weighted"),
        ("fedavg" + BALANCED_SUFFIX, "0"),
        ("fedavg" + BALANCED_SUFFIX, "mean"),
        ("fedavg" + BALANCED_SUFFIX, "weighted"),
    ]


def test_local_baseline_single_class_client_is_perfect(small_arch, make_client):
    clients = [make_client([0, 12, 0], seed=1)]
    testsets = [make_client([0, 8, 0], seed=2)]
    config = _config(num_clients=1, baselines=BaselinesConfig(local_epochs=30, local_lr=0.05))
    records = EvalService(config, testsets, testsets[0], [3, 2, 1]).run_baseline_local(clients, small_arch)
    assert records[0].method == "local"
    assert records[0].overall == 1.0


@pytest.mark.parametrize("update", [{"expert_epochs": 0}, {"lr": 0.0}])
def test_fedavg_ft_without_training_equals_fedavg(small_model, make_client, update):
    clients = [make_client([6, 4, 2]), make_client([2, 2, 8], client_id=1, seed=1)]
    testsets = [make_client([3, 2, 1], seed=5), make_client([1, 1, 4], client_id=1, seed=6)]
    config = _config(phase2=Phase2Config(batch_size=4, **update))
    service = EvalService(config, testsets, testsets[0], [3, 2, 1])
    tuned = service.run_baseline_fedavg_ft(small_model, clients)
    plain = service.evaluate_fedavg(small_model)
    for a, b in zip(tuned, plain):
        assert a.method == "fedavg_ft"
        assert a.same_values(b.model_copy(update={"method": "fedavg_ft"}))


def test_sweep_method_names():
    assert sweep_method(0.0) == "ecl[lambda=0.0]"
    assert sweep_method(0.25) == "ecl[lambda=0.25]"


def test_equal_row_norms_make_scaling_schemes_identical(small_model, make_client):
    testsets = [make_client([4, 3, 1], seed=3), make_client([0, 5, 2], client_id=1, seed=4)]
    states = []
    for client_id, testset in enumerate(testsets):
        assignment = sort_and_group(testset.class_counts, 2)
        experts = [None if assignment.is_empty(m) else small_model.copy() for m in range(2)]
        experts[0].blocks[-1].bias += 0.5
        states.append(PersonalizedState(client_id, small_model, experts, assignment))
    service = EvalService(_config(), testsets, testsets[0], [3, 2, 1])
    records = service.evaluate_ecl(states, lambda_sweep=[])
    scaled = [r for r in records if r.method == "ecl"]
    plain = [r.model_copy(update={"method": "ecl"}) for r in records if r.method == "ecl[no_scaling]"]
    assert metrics_csv_text(scaled) == metrics_csv_text(plain)
