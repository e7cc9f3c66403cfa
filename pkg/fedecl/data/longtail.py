from __future__ import annotations

from typing import List

import numpy as np

from ..exceptions import DataError
from ..utils.rounding import round_half_up
from .datasets import LabeledDataset


def longtail_counts(num_classes: int, head_count: int, imbalance_factor: float) -> List[int]:
    """Exponential profile ``n_c = round(n_0 * IF ** (-c / (C - 1)))``.

    Rounding is half-up; a single class keeps ``n_0``.
    """
    if imbalance_factor < 1:
        raise DataError(f"imbalance factor must be >= 1, got {imbalance_factor}")
    if num_classes == 1:
        return [head_count]
    return [
        round_half_up(head_count * imbalance_factor ** (-c / (num_classes - 1)))
        for c in range(num_classes)
    ]


def shape_longtail(data: LabeledDataset, imbalance_factor: float, seed: int) -> LabeledDataset:
    """Subsample each class without replacement down to the long-tail profile.

    ``n_0`` is the largest per-class count of ``data``; kept samples retain
    their original relative order.
    """
    available = data.class_counts
    targets = longtail_counts(data.num_classes, int(available.max()), imbalance_factor)
    kept = []
    for label, target in enumerate(targets):
        if available[label] < target:
            raise DataError(
                f"class {label} has {available[label]} samples, long-tail profile needs {target}"
            )
        pool = data.indices_of(label)
        rng = np.random.default_rng([seed, label])
        kept.append(np.sort(rng.choice(pool, size=target, replace=False)))
    return data.take(np.sort(np.concatenate(kept)))
