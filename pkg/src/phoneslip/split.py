"""Per-class train/test partitioning."""

from __future__ import annotations

import math

import numpy as np

from .errors import InsufficientClassRows, InvalidArgument


def class_train_count(n: int, train_fraction: float) -> int:
    """Rows of an ``n``-row class that go to training: round half up, at least
    one on each side."""
    k = math.floor(train_fraction * n + 0.5)
    return min(max(k, 1), n - 1)


def stratified_partition(labels, train_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded shuffle within each class; returns sorted (train, test) row indices."""
    if not 0.0 < train_fraction < 1.0:
        raise InvalidArgument("train_fraction must lie in (0, 1)")
    labels = np.asarray(labels)
    rng = np.random.Generator(np.random.Philox(seed % 2**64))
    train, test = [], []
    for cls in np.unique(labels):
        rows = np.flatnonzero(labels == cls)
        if len(rows) < 2:
            raise InsufficientClassRows(f"class {cls} has {len(rows)} rows, need at least 2")
        rows = rows[rng.permutation(len(rows))]
        k = class_train_count(len(rows), train_fraction)
        train.extend(rows[:k])
        test.extend(rows[k:])
    return np.sort(np.array(train, dtype=int)), np.sort(np.array(test, dtype=int))
