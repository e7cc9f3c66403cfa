from __future__ import annotations

import csv
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Optional, Tuple

import numpy as np

from ..exceptions import DataError, ParseError


@dataclass(eq=False)
class LabeledDataset:
    """Feature matrix plus integer labels.

    ``sample_ids`` identify each row in the dataset it was first generated or
    loaded as; subsets keep them, so provenance is always checkable.
    """

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    sample_ids: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or self.features.shape[0] != self.labels.shape[0]:
            raise DataError(
                f"features {self.features.shape} and labels {self.labels.shape} disagree"
            )
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise DataError(f"labels must lie in [0, {self.num_classes})")
        if self.sample_ids is None:
            self.sample_ids = np.arange(self.labels.shape[0], dtype=np.int64)
        else:
            self.sample_ids = np.asarray(self.sample_ids, dtype=np.int64)

    def __len__(self) -> int:
        return int(self.labels.shape[0])

    @property
    def input_dim(self) -> int:
        return int(self.features.shape[1])

    @cached_property
    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.num_classes).astype(np.int64)

    @property
    def present_classes(self) -> np.ndarray:
        return np.flatnonzero(self.class_counts > 0)

    def indices_of(self, label: int) -> np.ndarray:
        return np.flatnonzero(self.labels == label)

    def take(self, index: np.ndarray) -> "LabeledDataset":
        index = np.asarray(index, dtype=np.int64)
        return LabeledDataset(
            features=self.features[index],
            labels=self.labels[index],
            num_classes=self.num_classes,
            sample_ids=self.sample_ids[index],
        )

    def restrict(self, classes: Iterable[int]) -> "LabeledDataset":
        wanted = np.isin(self.labels, np.fromiter(classes, dtype=np.int64))
        return self.take(np.flatnonzero(wanted))

    def equals(self, other: "LabeledDataset") -> bool:
        return (
            self.num_classes == other.num_classes
            and np.array_equal(self.labels, other.labels)
            and np.array_equal(self.features, other.features)
        )


@dataclass(eq=False)
class ClientDataset(LabeledDataset):
    client_id: int = 0

    @classmethod
    def from_subset(cls, client_id: int, data: LabeledDataset, index: np.ndarray) -> "ClientDataset":
        subset = data.take(index)
        return cls(
            features=subset.features,
            labels=subset.labels,
            num_classes=subset.num_classes,
            sample_ids=subset.sample_ids,
            client_id=client_id,
        )


def synth_generate(
    num_classes: int,
    input_dim: int,
    per_class_count: int,
    spread: float,
    seed: int,
) -> LabeledDataset:
    """Isotropic Gaussian blobs around seed-derived unit-norm class means.

    Samples are laid out class-major: all of class 0, then class 1, ...
    """
    if min(num_classes, input_dim, per_class_count) < 1 or spread < 0:
        raise DataError("synthetic dataset parameters must be positive")
    rng = np.random.default_rng(seed)
    means = _draw_means(rng, num_classes, input_dim)
    noise = rng.standard_normal((num_classes, per_class_count, input_dim))
    features = (means[:, None, :] + spread * noise).reshape(-1, input_dim)
    labels = np.repeat(np.arange(num_classes), per_class_count)
    return LabeledDataset(features=features, labels=labels, num_classes=num_classes)


def _draw_means(rng: np.random.Generator, num_classes: int, input_dim: int) -> np.ndarray:
    means = rng.standard_normal((num_classes, input_dim))
    return means / np.linalg.norm(means, axis=1, keepdims=True)


def class_means(num_classes: int, input_dim: int, seed: int) -> np.ndarray:
    """The class centres ``synth_generate`` uses for ``seed``."""
    return _draw_means(np.random.default_rng(seed), num_classes, input_dim)


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def load_csv(path: Path, num_classes: Optional[int] = None) -> LabeledDataset:
    """Read ``label,f1,...,fd`` rows; a non-numeric first field marks a header.

    Row numbers in errors are 1-based file lines.
    """
    if not path.exists():
        raise DataError(f"dataset file not found: {path}")
    labels = []
    rows = []
    width: Optional[int] = None
    with path.open(newline="", encoding="utf-8") as handle:
        for row_number, row in enumerate(csv.reader(handle), start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            if row_number == 1 and not _is_number(row[0].strip()):
                continue
            if width is None:
                width = len(row)
                if width < 2:
                    raise ParseError(row_number, "expected a label and at least one feature")
            elif len(row) != width:
                raise ParseError(row_number, f"expected {width} fields, found {len(row)}")
            try:
                label_value = float(row[0])
                values = [float(cell) for cell in row[1:]]
            except ValueError:
                raise ParseError(row_number, "non-numeric field") from None
            if not label_value.is_integer():
                raise ParseError(row_number, f"label is not an integer: {row[0]}")
            label = int(label_value)
            if label < 0 or (num_classes is not None and label >= num_classes):
                raise ParseError(row_number, f"label out of range: {label}")
            labels.append(label)
            rows.append(values)

    if not rows:
        raise DataError(f"dataset file has no samples: {path}")
    classes = num_classes if num_classes is not None else max(labels) + 1
    return LabeledDataset(features=np.array(rows), labels=np.array(labels), num_classes=classes)


def write_csv(path: Path, data: LabeledDataset, header: bool = True) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        if header:
            writer.writerow(["label", *(f"f{i}" for i in range(1, data.input_dim + 1))])
        for label, row in zip(data.labels, data.features):
            writer.writerow([int(label), *(repr(float(value)) for value in row)])


def split_per_class(data: LabeledDataset, first: int) -> Tuple[LabeledDataset, LabeledDataset]:
    """Split every class into its first ``first`` samples and the rest."""
    head, rest = [], []
    for label in range(data.num_classes):
        index = data.indices_of(label)
        if index.size < first:
            raise DataError(f"class {label} has {index.size} samples, cannot hold out after {first}")
        head.append(index[:first])
        rest.append(index[first:])
    return data.take(np.concatenate(head)), data.take(np.concatenate(rest))
