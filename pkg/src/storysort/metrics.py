"""Rank metrics comparing a predicted permutation against the gold order.

Three per-story metrics (Spearman rank correlation, pairwise accuracy,
mean absolute displacement) plus a position confusion matrix and an
unweighted corpus-level aggregate. Predictions are total orders, so the
closed-form Spearman without tie handling is exact.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import Permutation
from .errors import DimensionError, EmptyInputError


@dataclass(frozen=True)
class MetricReport:
    spearman: float
    pairwise_accuracy: float
    avg_distance: float
    story_count: int

    def to_json(self) -> dict:
        return {
            "spearman": self.spearman,
            "pairwise_accuracy": self.pairwise_accuracy,
            "avg_distance": self.avg_distance,
            "story_count": self.story_count,
        }


@dataclass(frozen=True)
class ConfusionMatrix:
    """counts[g][p] = elements whose gold position is g and predicted position is p."""

    counts: np.ndarray

    @property
    def n(self) -> int:
        return self.counts.shape[0]


def _check_same_n(pred: Permutation, gold: Permutation) -> int:
    if pred.n != gold.n:
        raise DimensionError(f"permutation sizes differ: {pred.n} vs {gold.n}")
    return pred.n


def spearman(pred: Permutation, gold: Permutation) -> float:
    """1 - 6*sum(d^2)/(n(n^2-1)) over per-element position differences."""
    n = _check_same_n(pred, gold)
    ss = 0
    for i in range(n):
        d = pred.positions[i] - gold.positions[i]
        ss += d * d
    return 1.0 - 6.0 * ss / (n * (n * n - 1))


def pairwise_accuracy(pred: Permutation, gold: Permutation) -> float:
    """Fraction of element pairs whose predicted relative order matches gold."""
    n = _check_same_n(pred, gold)
    agree = 0
    total = n * (n - 1) // 2
    for i in range(n):
        for j in range(i + 1, n):
            dp = pred.positions[i] - pred.positions[j]
            dg = gold.positions[i] - gold.positions[j]
            if (dp > 0) == (dg > 0):
                agree += 1
    return agree / total


def avg_distance(pred: Permutation, gold: Permutation) -> float:
    """Mean absolute displacement of elements between predicted and gold positions."""
    n = _check_same_n(pred, gold)
    total = 0
    for i in range(n):
        total += abs(pred.positions[i] - gold.positions[i])
    return total / n


def score_story(pred: Permutation, gold: Permutation) -> tuple[float, float, float]:
    """Convenience triple (spearman, pairwise_accuracy, avg_distance)."""
    return (spearman(pred, gold), pairwise_accuracy(pred, gold), avg_distance(pred, gold))


def confusion(pairs: Iterable[tuple[Permutation, Permutation]]) -> ConfusionMatrix:
    """Tally gold-position vs predicted-position counts over (pred, gold) pairs."""
    pairs = list(pairs)
    if not pairs:
        raise EmptyInputError("confusion requires at least one (pred, gold) pair")
    n = _check_same_n(*pairs[0])
    counts = np.zeros((n, n), dtype=np.int64)
    for pred, gold in pairs:
        if pred.n != n or gold.n != n:
            raise DimensionError(f"inconsistent n across pairs: expected {n}")
        for i in range(n):
            counts[gold.positions[i], pred.positions[i]] += 1
    return ConfusionMatrix(counts)


def aggregate(per_story: Sequence[tuple[float, float, float]]) -> MetricReport:
    """Unweighted mean of per-story (spearman, pairwise, distance) triples."""
    per_story = list(per_story)
    if not per_story:
        raise EmptyInputError("aggregate requires at least one story")
    count = len(per_story)
    return MetricReport(
        spearman=sum(t[0] for t in per_story) / count,
        pairwise_accuracy=sum(t[1] for t in per_story) / count,
        avg_distance=sum(t[2] for t in per_story) / count,
        story_count=count,
    )
