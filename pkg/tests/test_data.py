from __future__ import annotations

import numpy as np
import pytest

from fedecl.data.datasets import LabeledDataset, class_means, load_csv, synth_generate, write_csv
from fedecl.data.grouping import GLOBAL_ONLY, balance_subset, group_sizes, sort_and_group
from fedecl.data.longtail import longtail_counts, shape_longtail
from fedecl.data.partition import PartitionSpec, count_table, dirichlet_partition, local_imbalance
from fedecl.data.testsets import build_client_testset, matched_test_counts
from fedecl.exceptions import DataError, ParseError


def test_synth_zero_spread_collapses_to_means():
    data = synth_generate(3, 4, 5, 0.0, seed=11)
    means = class_means(3, 4, seed=11)
    assert np.array_equal(data.features, np.repeat(means, 5, axis=0))
    assert np.allclose(np.linalg.norm(means, axis=1), 1.0)


def test_synth_is_deterministic():
    assert synth_generate(4, 6, 10, 0.3, seed=2).equals(synth_generate(4, 6, 10, 0.3, seed=2))
    assert not synth_generate(4, 6, 10, 0.3, seed=2).equals(synth_generate(4, 6, 10, 0.3, seed=3))


def test_synth_small_spread_is_nearest_centroid_separable():
    data = synth_generate(2, 8, 50, 0.05, seed=0)
    means = class_means(2, 8, seed=0)
    distances = np.linalg.norm(data.features[:, None, :] - means[None, :, :], axis=2)
    assert np.array_equal(np.argmin(distances, axis=1), data.labels)


@pytest.mark.parametrize("imbalance, tail", [(100, 5), (10, 50)])
def test_longtail_tail_counts(imbalance, tail):
    counts = longtail_counts(10, 500, imbalance)
    assert counts[0] == 500
    assert counts[-1] == tail
    assert all(a >= b for a, b in zip(counts, counts[1:]))


def test_shape_longtail_is_subset_with_profile():
    data = synth_generate(10, 4, 500, 0.2, seed=1)
    shaped = shape_longtail(data, 100, seed=3)
    assert shaped.class_counts.tolist() == longtail_counts(10, 500, 100)
    assert set(shaped.sample_ids.tolist()) <= set(data.sample_ids.tolist())
    assert np.array_equal(shaped.features, data.features[shaped.sample_ids])


def test_shape_longtail_unit_factor_is_noop():
    data = synth_generate(3, 2, 20, 0.2, seed=1)
    assert shape_longtail(data, 1, seed=0).equals(data)


def test_shape_longtail_insufficient_samples():
    data = LabeledDataset(np.zeros((3, 1)), np.array([0, 0, 1]), num_classes=3)
    with pytest.raises(DataError):
        shape_longtail(data, 1, seed=0)


def _reference_partition(labels: np.ndarray, num_classes: int, spec: PartitionSpec) -> np.ndarray:
    table = np.zeros((spec.num_clients, num_classes), dtype=np.int64)
    for label in range(num_classes):
        n = int(np.sum(labels == label))
        rng = np.random.default_rng([spec.seed, label])
        gammas = rng.standard_gamma(spec.alpha, size=spec.num_clients)
        proportions = gammas / gammas.sum()
        quotas = proportions / proportions.sum() * n
        counts = [int(np.floor(q)) for q in quotas]
        fractions = sorted(range(spec.num_clients), key=lambda k: (-(quotas[k] - counts[k]), k))
        for k in fractions[: n - sum(counts)]:
            counts[k] += 1
        table[:, label] = counts
    return table


def test_dirichlet_matches_reference_sampler():
    data = synth_generate(5, 2, 60, 0.1, seed=4)
    spec = PartitionSpec(num_clients=2, alpha=0.2, seed=1234)
    clients = dirichlet_partition(data, spec)
    assert np.array_equal(count_table(clients), _reference_partition(data.labels, 5, spec))


def test_dirichlet_conserves_and_never_duplicates():
    data = shape_longtail(synth_generate(6, 3, 80, 0.1, seed=0), 20, seed=0)
    clients = dirichlet_partition(data, PartitionSpec(num_clients=7, alpha=0.2, seed=9))
    assert np.array_equal(count_table(clients).sum(axis=0), data.class_counts)
    ids = np.concatenate([client.sample_ids for client in clients])
    assert ids.size == len(data) and np.unique(ids).size == len(data)
    assert [client.client_id for client in clients] == list(range(7))


def test_dirichlet_is_deterministic():
    data = synth_generate(4, 3, 30, 0.1, seed=0)
    spec = PartitionSpec(num_clients=5, alpha=0.5, seed=3)
    first, second = dirichlet_partition(data, spec), dirichlet_partition(data, spec)
    assert all(a.equals(b) for a, b in zip(first, second))


def test_dirichlet_large_alpha_is_near_uniform():
    data = synth_generate(1, 2, 1000, 0.1, seed=0)
    clients = dirichlet_partition(data, PartitionSpec(num_clients=4, alpha=1e9, seed=0))
    assert all(abs(len(client) - 250) <= 1 for client in clients)


def test_local_imbalance():
    assert local_imbalance(np.array([40, 0, 4])) == 10.0
    assert np.isnan(local_imbalance(np.zeros(3)))


def test_sort_and_group_rule_examples():
    assignment = sort_and_group([50, 30, 20, 5], 2)
    assert assignment.groups == ((0, 1), (2, 3))
    assert sort_and_group([10] * 10, 2).groups == ((0, 1, 2, 3, 4), (5, 6, 7, 8, 9))
    assert [len(g) for g in sort_and_group([3] * 10, 3).groups] == [4, 3, 3]


def test_sort_and_group_trailing_empty_groups():
    assignment = sort_and_group([0, 7, 0, 2], 3)
    assert assignment.groups == ((1,), (3,), ())
    assert assignment.is_empty(2)
    assert assignment.active_experts() == [0, 1]
    assert assignment.owners().tolist() == [GLOBAL_ONLY, 0, GLOBAL_ONLY, 1]


def test_sort_and_group_random_tables():
    rng = np.random.default_rng(2024)
    for _ in range(1000):
        num_classes = int(rng.integers(1, 12))
        counts = rng.integers(0, 6, size=num_classes) * rng.integers(0, 2, size=num_classes)
        if not counts.any():
            counts[int(rng.integers(num_classes))] = 1
        experts = int(rng.integers(1, num_classes + 1))
        assignment = sort_and_group(counts.tolist(), experts)
        present = {int(c) for c in np.flatnonzero(counts)}

        flat = [c for group in assignment.groups for c in group]
        assert sorted(flat) == sorted(present)
        assert len(flat) == len(set(flat))
        assert tuple(flat) == assignment.sorted_classes
        keys = [(-int(counts[c]), c) for c in assignment.sorted_classes]
        assert keys == sorted(keys)
        sizes = [len(group) for group in assignment.groups]
        assert max(sizes) - min(sizes) <= 1
        assert sizes == sorted(sizes, reverse=True)
        assert sizes == group_sizes(len(present), experts)


def test_balance_subset_examples(make_client):
    client = make_client([8, 8, 3])
    balanced = balance_subset(client, [0, 1], seed=0)
    assert balanced.class_counts.tolist() == [8, 8, 0]
    assert np.unique(balanced.sample_ids).size == 16

    skewed = make_client([8, 2])
    balanced = balance_subset(skewed, [0, 1], seed=5)
    assert balanced.class_counts.tolist() == [8, 8]
    originals = set(skewed.sample_ids[skewed.labels == 1].tolist())
    assert set(balanced.sample_ids[balanced.labels == 1].tolist()) == originals

    single = balance_subset(skewed, [1], seed=5)
    assert sorted(single.sample_ids.tolist()) == sorted(originals)


def test_balance_subset_empty_class(make_client):
    with pytest.raises(DataError):
        balance_subset(make_client([4, 0]), [0, 1], seed=0)


def test_matched_test_counts_rounding():
    assert matched_test_counts(np.array([5, 3, 2]), 10).tolist() == [5, 3, 2]
    assert matched_test_counts(np.array([7, 7]), 100).tolist() == [50, 50]
    assert matched_test_counts(np.array([0, 9, 0]), 12).tolist() == [0, 12, 0]


def test_build_client_testset_histogram_and_exhaustion():
    pool = synth_generate(3, 2, 20, 0.1, seed=0)
    testset = build_client_testset(pool, np.array([50, 30, 20]), 10, seed=1)
    assert testset.class_counts.tolist() == [5, 3, 2]
    assert np.unique(testset.sample_ids).size == 10
    with pytest.raises(DataError, match="exhausted"):
        build_client_testset(pool, np.array([1, 0, 0]), 21, seed=1)


def test_csv_round_trip(tmp_path):
    data = synth_generate(3, 4, 5, 0.5, seed=8)
    write_csv(tmp_path / "data.csv", data)
    assert load_csv(tmp_path / "data.csv", num_classes=3).equals(data)


def test_csv_without_header(tmp_path):
    path = tmp_path / "small.csv"
    path.write_text("0,1.0,2.0\n1,3.0,4.0\n", encoding="utf-8")
    data = load_csv(path)
    assert len(data) == 2 and data.num_classes == 2


def test_csv_ragged_row_names_row(tmp_path):
    path = tmp_path / "ragged.csv"
    path.write_text("0,1.0,2.0\n1,3.0\n", encoding="utf-8")
    with pytest.raises(ParseError, match="row 2") as info:
        load_csv(path)
    assert info.value.row == 2


def test_csv_label_out_of_range(tmp_path):
    path = tmp_path / "labels.csv"
    path.write_text("label,f1\n0,1.0\n5,1.0\n", encoding="utf-8")
    with pytest.raises(ParseError, match="row 3"):
        load_csv(path, num_classes=3)
