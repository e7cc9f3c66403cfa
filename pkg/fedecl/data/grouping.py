from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from ..exceptions import DataError
from .datasets import LabeledDataset

GLOBAL_ONLY = -1


def group_sizes(total: int, groups: int) -> List[int]:
    """Near-equal split of ``total`` items; the first ``total % groups`` get one extra."""
    base, extra = divmod(total, groups)
    return [base + 1 if index < extra else base for index in range(groups)]


def count_sorted(counts: Sequence[int]) -> List[int]:
    """Present classes by descending count, ties by ascending class index."""
    counts = np.asarray(counts)
    present = [int(c) for c in np.flatnonzero(counts > 0)]
    return sorted(present, key=lambda c: (-int(counts[c]), c))


@dataclass(frozen=True)
class ExpertAssignment:
    groups: Tuple[Tuple[int, ...], ...]
    sorted_classes: Tuple[int, ...]
    num_classes: int

    @property
    def num_experts(self) -> int:
        return len(self.groups)

    def is_empty(self, expert: int) -> bool:
        return not self.groups[expert]

    def active_experts(self) -> List[int]:
        return [index for index, group in enumerate(self.groups) if group]

    def owners(self) -> np.ndarray:
        """Owning expert per class, ``GLOBAL_ONLY`` for classes absent on the client."""
        owner = np.full(self.num_classes, GLOBAL_ONLY, dtype=np.int64)
        for index, group in enumerate(self.groups):
            owner[list(group)] = index
        return owner


def sort_and_group(counts: Sequence[int], num_experts: int) -> ExpertAssignment:
    """Split a client's count-sorted present classes into contiguous groups.

    When there are fewer present classes than experts the trailing groups are
    empty.
    """
    if num_experts < 1:
        raise ValueError("num_experts must be at least 1")
    ordered = count_sorted(counts)
    groups = []
    start = 0
    for size in group_sizes(len(ordered), num_experts):
        groups.append(tuple(ordered[start:start + size]))
        start += size
    return ExpertAssignment(groups=tuple(groups), sorted_classes=tuple(ordered), num_classes=len(counts))


def balance_subset(data: LabeledDataset, classes: Iterable[int], seed: int) -> LabeledDataset:
    """Restrict to ``classes`` and oversample each one up to the largest count.

    Every original sample is kept once; the shortfall of a class is drawn with
    replacement from that class's own samples.
    """
    wanted = sorted(set(int(c) for c in classes))
    pools = [data.indices_of(label) for label in wanted]
    for label, pool in zip(wanted, pools):
        if pool.size == 0:
            raise DataError(f"class {label} has no samples to balance")
    target = max(pool.size for pool in pools)
    picked = []
    for label, pool in zip(wanted, pools):
        picked.append(pool)
        shortfall = target - pool.size
        if shortfall:
            rng = np.random.default_rng([seed, label])
            picked.append(rng.choice(pool, size=shortfall, replace=True))
    return data.take(np.concatenate(picked))
