"""Classification metrics and cross-seed aggregation.

Scores are reported as mean plus/minus one population standard deviation
over per-seed runs. Per-class F1 falls back to 0 when precision and recall
are both undefined (the usual zero-division convention).
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .corpus import Label


class MetricsError(Exception):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """Binary confusion counts with OFFENSIVE as the positive class."""

    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise MetricsError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def confusion(preds: Sequence[Label | int], golds: Sequence[Label | int]) -> ConfusionMatrix:
    if len(preds) != len(golds):
        raise MetricsError(f"length mismatch: {len(preds)} predictions vs {len(golds)} golds")
    tp = fp = fn = tn = 0
    for p, g in zip(preds, golds):
        p, g = int(p), int(g)
        if p == 1 and g == 1:
            tp += 1
        elif p == 1 and g == 0:
            fp += 1
        elif p == 0 and g == 1:
            fn += 1
        else:
            tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, fn=fn, tn=tn)


def _f1(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    if denom == 0:
        return 0.0
    return 2 * tp / denom


def per_class_f1(cm: ConfusionMatrix) -> dict[int, float]:
    if cm.total == 0:
        raise MetricsError("cannot score an empty confusion matrix")
    return {
        1: _f1(cm.tp, cm.fp, cm.fn),
        0: _f1(cm.tn, cm.fn, cm.fp),
    }


def f1_macro(cm: ConfusionMatrix) -> float:
    """Unweighted mean of the per-class F1 scores."""
    scores = per_class_f1(cm)
    return (scores[0] + scores[1]) / 2.0


@dataclass(frozen=True)
class ScoreSummary:
    mean: float
    std: float
    n_runs: int
    per_run: tuple[float, ...]


def aggregate(per_run: Sequence[float]) -> ScoreSummary:
    """Mean and population standard deviation over per-seed scores."""
    if not per_run:
        raise MetricsError("cannot aggregate an empty run list")
    n = len(per_run)
    mean = sum(per_run) / n
    if max(per_run) == min(per_run):  # identical runs report exactly zero spread
        var = 0.0
    else:
        var = sum((x - mean) ** 2 for x in per_run) / n
    return ScoreSummary(mean=mean, std=math.sqrt(var), n_runs=n, per_run=tuple(per_run))
