"""
Deterministic train/test splitting.

Train size is always floor(ratio * n). With labels the split is stratified:
each class keeps at least one example on each side, and the per-class train
counts are the floored shares plus the largest fractional remainders.
"""

import math
from typing import List, Optional, Sequence, Tuple, TypeVar

import numpy as np

from ferroscope.utils.errors import InvalidArgumentError, StratificationError

T = TypeVar("T")


def _class_train_counts(sizes: np.ndarray, ratio: float, target: int) -> np.ndarray:
    shares = sizes * ratio
    counts = np.clip(np.floor(shares).astype(np.int64), 1, sizes - 1)
    remainders = shares - np.floor(shares)
    # largest remainder first, class order breaks ties
    order = sorted(range(sizes.size), key=lambda c: (-remainders[c], c))
    diff = target - int(counts.sum())
    while diff:
        moved = False
        for c in order if diff > 0 else reversed(order):
            if diff > 0 and counts[c] < sizes[c] - 1:
                counts[c] += 1
                diff -= 1
                moved = True
            elif diff < 0 and counts[c] > 1:
                counts[c] -= 1
                diff += 1
                moved = True
            if not diff:
                break
        if not moved:
            raise StratificationError(
                f"Cannot place {target} of {int(sizes.sum())} examples in train while keeping every class on both sides"
            )
    return counts


def split_indices(n: int, ratio: float, seed: int, labels: Optional[Sequence[int]] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Shuffled index arrays (train, test) partitioning range(n)."""
    if n < 1:
        raise InvalidArgumentError("Cannot split an empty dataset")
    if not 0.0 < ratio < 1.0:
        raise InvalidArgumentError(f"Split ratio must be in (0, 1), got {ratio}")
    target = math.floor(ratio * n)
    rng = np.random.default_rng(seed)

    if labels is None:
        perm = rng.permutation(n)
        return perm[:target], perm[target:]

    labels = np.asarray(labels, dtype=np.int64)
    if labels.shape != (n,):
        raise InvalidArgumentError(f"{labels.size} labels for {n} examples")
    classes, sizes = np.unique(labels, return_counts=True)
    thin = [int(c) for c, s in zip(classes, sizes) if s < 2]
    if thin:
        raise StratificationError(f"Classes {thin} have fewer than 2 examples; cannot stratify")
    counts = _class_train_counts(sizes, ratio, target)

    train: List[int] = []
    test: List[int] = []
    for cls, take in zip(classes, counts):
        members = rng.permutation(np.flatnonzero(labels == cls))
        train.extend(members[:take].tolist())
        test.extend(members[take:].tolist())
    return rng.permutation(np.asarray(train, dtype=np.int64)), rng.permutation(np.asarray(test, dtype=np.int64))


def split(dataset: Sequence[T], ratio: float, seed: int, labels: Optional[Sequence[int]] = None) -> Tuple[List[T], List[T]]:
    train, test = split_indices(len(dataset), ratio, seed, labels)
    return [dataset[i] for i in train], [dataset[i] for i in test]
