from __future__ import annotations

import math
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..data.datasets import LabeledDataset
from ..data.grouping import group_sizes
from ..exceptions import DataError
from ..schemas.records import MetricsRecord

Predictor = Callable[[np.ndarray], np.ndarray]


def class_thirds(reference_counts: Sequence[int]) -> Tuple[List[int], List[int], List[int]]:
    """Head / mid / tail classes: count-sorted thirds, remainders headward.

    Sorting is by descending reference count, ties by class index, so every
    class lands in exactly one third.
    """
    counts = np.asarray(reference_counts)
    order = sorted(range(counts.size), key=lambda c: (-int(counts[c]), c))
    head_n, mid_n, _ = group_sizes(len(order), 3)
    return order[:head_n], order[head_n:head_n + mid_n], order[head_n + mid_n:]


def _pooled(correct: np.ndarray, support: np.ndarray, classes: Sequence[int]) -> float:
    total = int(support[list(classes)].sum()) if classes else 0
    if total == 0:
        return math.nan
    return float(correct[list(classes)].sum() / total)


def score(
    predictions: np.ndarray,
    labels: np.ndarray,
    num_classes: int,
    method: str,
    seed: int,
    client: str,
    reference_counts: Optional[Sequence[int]] = None,
) -> MetricsRecord:
    """Exact top-1 counting, overall and per class.

    Classes without test samples report NaN. Without ``reference_counts`` the
    thirds follow class index order.
    """
    predictions = np.asarray(predictions, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise DataError("cannot evaluate on an empty test set")
    hits = predictions == labels
    support = np.bincount(labels, minlength=num_classes)
    correct = np.bincount(labels, weights=hits.astype(np.float64), minlength=num_classes)
    per_class = [float(correct[c] / support[c]) if support[c] else math.nan for c in range(num_classes)]

    if reference_counts is None:
        reference_counts = np.arange(num_classes, 0, -1)
    head, mid, tail = class_thirds(reference_counts)
    return MetricsRecord(
        method=method,
        seed=seed,
        client=client,
        overall=float(hits.sum() / labels.size),
        head=_pooled(correct, support, head),
        mid=_pooled(correct, support, mid),
        tail=_pooled(correct, support, tail),
        per_class=per_class,
    )


def evaluate(
    predict_fn: Predictor,
    test_set: LabeledDataset,
    method: str = "model",
    seed: int = 0,
    client: str = "0",
    reference_counts: Optional[Sequence[int]] = None,
) -> MetricsRecord:
    predictions = predict_fn(test_set.features)
    return score(predictions, test_set.labels, test_set.num_classes, method, seed, client, reference_counts)


def _nanmean(values: Sequence[float]) -> float:
    finite = [value for value in values if not math.isnan(value)]
    return sum(finite) / len(finite) if finite else math.nan


def macro_mean(records: Sequence[MetricsRecord], client: str = "mean") -> MetricsRecord:
    """Client-macro average; NaN entries are left out of each mean."""
    if not records:
        raise DataError("no records to average")
    first = records[0]
    num_classes = len(first.per_class)
    return MetricsRecord(
        method=first.method,
        seed=first.seed,
        client=client,
        overall=_nanmean([r.overall for r in records]),
        head=_nanmean([r.head for r in records]),
        mid=_nanmean([r.mid for r in records]),
        tail=_nanmean([r.tail for r in records]),
        per_class=[_nanmean([r.per_class[c] for r in records]) for c in range(num_classes)],
    )
