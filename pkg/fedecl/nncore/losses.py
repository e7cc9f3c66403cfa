"""Cross-entropy and balanced-softmax cross-entropy with analytic gradients."""
from __future__ import annotations

from typing import Literal, Optional, Tuple

import numpy as np

from ..exceptions import DomainError, NumericError, ShapeError

LossKind = Literal["ce", "bsce"]


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


def _check(logits: np.ndarray, labels: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    logits = np.asarray(logits, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],) or logits.shape[0] == 0:
        raise ShapeError("logits/labels", "(B, C) and (B,) with B >= 1", (logits.shape, labels.shape))
    if labels.min() < 0 or labels.max() >= logits.shape[1]:
        raise DomainError(f"labels must lie in [0, {logits.shape[1]})")
    if not np.all(np.isfinite(logits)):
        raise NumericError("non-finite logits")
    return logits, labels


def _softmax_xent(
    logits: np.ndarray,
    labels: np.ndarray,
    log_prior: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray]:
    # log_prior entries of -inf drop a class from the normaliser.
    adjusted = logits if log_prior is None else logits + log_prior
    shifted = adjusted - adjusted.max(axis=1, keepdims=True)
    exp = np.exp(shifted)
    total = exp.sum(axis=1, keepdims=True)
    rows = np.arange(labels.shape[0])
    losses = np.log(total[:, 0]) - shifted[rows, labels]
    batch = labels.shape[0]
    dlogits = exp / total
    dlogits[rows, labels] -= 1.0
    dlogits /= batch
    return float(losses.mean()), dlogits


def ce_loss(logits: np.ndarray, labels: np.ndarray) -> Tuple[float, np.ndarray]:
    """Mean ``-log softmax(logits)[label]`` and its gradient w.r.t. the logits."""
    logits, labels = _check(logits, labels)
    return _softmax_xent(logits, labels)


def log_count_prior(class_counts: np.ndarray) -> np.ndarray:
    """``log(n_j / n_max)`` for present classes, ``-inf`` for absent ones.

    Dividing by the largest count is a constant shift of every logit, so it
    leaves the loss unchanged and makes uniform counts a prior of exact zeros.
    """
    counts = np.asarray(class_counts, dtype=np.float64)
    prior = np.full(counts.shape, -np.inf)
    present = counts > 0
    prior[present] = np.log(counts[present] / counts.max())
    return prior


def bsce_loss(
    logits: np.ndarray,
    labels: np.ndarray,
    class_counts: np.ndarray,
) -> Tuple[float, np.ndarray]:
    """Balanced softmax cross-entropy.

    Per sample ``-log(n_y exp(z_y) / sum_j n_j exp(z_j))`` with the sum over
    classes whose count is positive; absent classes get zero gradient.
    """
    logits, labels = _check(logits, labels)
    counts = np.asarray(class_counts)
    if counts.shape != (logits.shape[1],):
        raise ShapeError("class_counts", (logits.shape[1],), counts.shape)
    if np.any(counts[labels] <= 0):
        missing = sorted(set(int(c) for c in labels[counts[labels] <= 0]))
        raise DomainError(f"zero class count for present label(s): {missing}")
    return _softmax_xent(logits, labels, log_count_prior(counts))


def compute_loss(
    kind: LossKind,
    logits: np.ndarray,
    labels: np.ndarray,
    class_counts: Optional[np.ndarray] = None,
) -> Tuple[float, np.ndarray]:
    if kind == "ce":
        return ce_loss(logits, labels)
    if kind == "bsce":
        if class_counts is None:
            raise DomainError("bsce loss requires class counts")
        return bsce_loss(logits, labels, class_counts)
    raise DomainError(f"unknown loss kind: {kind}")
