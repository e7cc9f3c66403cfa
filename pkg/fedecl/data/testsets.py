from __future__ import annotations

import numpy as np

from ..exceptions import DataError
from ..utils.rounding import largest_remainder
from .datasets import LabeledDataset


def matched_test_counts(client_counts: np.ndarray, size: int) -> np.ndarray:
    """Test histogram matching the client's training label proportions."""
    counts = np.asarray(client_counts, dtype=np.float64)
    if counts.sum() <= 0:
        raise DataError("client has no training samples to match")
    return largest_remainder(counts, size)


def build_client_testset(
    pool: LabeledDataset,
    client_counts: np.ndarray,
    size: int,
    seed: int,
) -> LabeledDataset:
    """Draw a distribution-matched test set from ``pool`` without replacement.

    The balanced evaluation set is ``pool`` itself.
    """
    targets = matched_test_counts(client_counts, size)
    picked = []
    for label, target in enumerate(targets):
        if target == 0:
            continue
        candidates = pool.indices_of(label)
        if candidates.size < target:
            raise DataError(
                f"test pool exhausted for class {label}: need {target}, have {candidates.size}"
            )
        rng = np.random.default_rng([seed, label])
        picked.append(np.sort(rng.choice(candidates, size=int(target), replace=False)))
    return pool.take(np.concatenate(picked))
