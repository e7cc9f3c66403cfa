from __future__ import annotations

from .datasets import (
    ClientDataset,
    LabeledDataset,
    class_means,
    load_csv,
    split_per_class,
    synth_generate,
    write_csv,
)
from .grouping import GLOBAL_ONLY, ExpertAssignment, balance_subset, group_sizes, sort_and_group
from .longtail import longtail_counts, shape_longtail
from .partition import PartitionSpec, count_table, dirichlet_partition, local_imbalance
from .testsets import build_client_testset, matched_test_counts

__all__ = [
    "GLOBAL_ONLY",
    "ClientDataset",
    "ExpertAssignment",
    "LabeledDataset",
    "PartitionSpec",
    "balance_subset",
    "build_client_testset",
    "class_means",
    "count_table",
    "dirichlet_partition",
    "group_sizes",
    "load_csv",
    "local_imbalance",
    "longtail_counts",
    "matched_test_counts",
    "shape_longtail",
    "split_per_class",
    "sort_and_group",
    "synth_generate",
    "write_csv",
]
