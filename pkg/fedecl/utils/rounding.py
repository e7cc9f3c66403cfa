from __future__ import annotations

import numpy as np


def largest_remainder(weights: np.ndarray, total: int) -> np.ndarray:
    """Integer apportionment of ``total`` proportional to ``weights``.

    Floors first, then hands the leftover units to the largest fractional
    parts; ties go to the lower index. The result always sums to ``total``.
    """
    weights = np.asarray(weights, dtype=np.float64)
    if total == 0 or weights.size == 0:
        return np.zeros(weights.shape, dtype=np.int64)
    mass = weights.sum()
    if mass <= 0:
        raise ValueError("weights must have positive mass")
    quotas = weights / mass * total
    counts = np.floor(quotas).astype(np.int64)
    leftover = int(total - counts.sum())
    if leftover > 0:
        order = np.argsort(-(quotas - counts), kind="stable")
        counts[order[:leftover]] += 1
    return counts


def round_half_up(value: float) -> int:
    return int(np.floor(value + 0.5))
